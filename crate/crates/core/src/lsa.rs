//! Correspondence analysis of a document-term matrix.
//!
//! With `P = X / n`, row masses `a`, column masses `b`, the standardized
//! residual matrix is
//!
//! ```text
//! S = D_a^{-1/2} (P − a bᵀ) D_b^{-1/2} = U D_λ Vᵀ
//! ```
//!
//! `S` is never materialized on the iterative path: products are evaluated
//! against the sparse counts plus a rank-one correction. Principal
//! coordinates are `D_a^{-1/2} U D_λ` for documents and `D_b^{-1/2} V D_λ`
//! for terms.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::svd::{truncated_svd, LinearOperator, SvdOptions};
use crate::text::SparseDtm;

/// The standardized residual operator of a count matrix with positive
/// marginals.
pub struct ResidualOperator<'a> {
    dtm: &'a SparseDtm,
    total: f64,
    inv_sqrt_row: Vec<f64>,
    inv_sqrt_col: Vec<f64>,
    sqrt_row_mass: Vec<f64>,
    sqrt_col_mass: Vec<f64>,
}

impl<'a> ResidualOperator<'a> {
    pub fn new(dtm: &'a SparseDtm) -> Result<Self> {
        check_margins(dtm)?;
        let total = dtm.total() as f64;
        let row_mass: Vec<f64> = dtm.row_sums().iter().map(|&r| r as f64 / total).collect();
        let col_mass: Vec<f64> = dtm.col_sums().iter().map(|&c| c as f64 / total).collect();
        Ok(ResidualOperator {
            dtm,
            total,
            inv_sqrt_row: row_mass.iter().map(|m| 1.0 / m.sqrt()).collect(),
            inv_sqrt_col: col_mass.iter().map(|m| 1.0 / m.sqrt()).collect(),
            sqrt_row_mass: row_mass.iter().map(|m| m.sqrt()).collect(),
            sqrt_col_mass: col_mass.iter().map(|m| m.sqrt()).collect(),
        })
    }
}

impl LinearOperator for ResidualOperator<'_> {
    fn nrows(&self) -> usize {
        self.dtm.n_rows()
    }

    fn ncols(&self) -> usize {
        self.dtm.n_cols()
    }

    // S x = D_a^{-1/2} P D_b^{-1/2} x − √a (√bᵀ x)
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let proj: f64 = self.sqrt_col_mass.iter().zip(x).map(|(s, v)| s * v).sum();
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let acc: f64 = self
                .dtm
                .row(i)
                .map(|(j, c)| c as f64 * self.inv_sqrt_col[j] * x[j])
                .sum();
            *o = acc / self.total * self.inv_sqrt_row[i] - self.sqrt_row_mass[i] * proj;
        });
    }

    fn apply_transpose(&self, y: &[f64], out: &mut [f64]) {
        let proj: f64 = self.sqrt_row_mass.iter().zip(y).map(|(s, v)| s * v).sum();
        out.par_iter_mut().enumerate().for_each(|(j, o)| {
            let acc: f64 = self
                .dtm
                .col(j)
                .map(|(i, c)| c as f64 * self.inv_sqrt_row[i] * y[i])
                .sum();
            *o = acc / self.total * self.inv_sqrt_col[j] - self.sqrt_col_mass[j] * proj;
        });
    }
}

fn check_margins(dtm: &SparseDtm) -> Result<()> {
    if dtm.total() == 0 {
        return Err(Error::DegenerateMargin("matrix has no counts".into()));
    }
    if let Some(i) = dtm.row_sums().iter().position(|&r| r == 0) {
        return Err(Error::DegenerateMargin(format!("row {:?} is empty", dtm.doc_ids()[i])));
    }
    if let Some(j) = dtm.col_sums().iter().position(|&c| c == 0) {
        return Err(Error::DegenerateMargin(format!("column {:?} is empty", dtm.terms()[j])));
    }
    Ok(())
}

/// `Σ_ij (p_ij − a_i b_j)² / (a_i b_j)`, the χ² statistic over `n`.
pub fn total_inertia(dtm: &SparseDtm) -> Result<f64> {
    check_margins(dtm)?;
    let n = dtm.total() as f64;
    let b: Vec<f64> = dtm.col_sums().iter().map(|&c| c as f64 / n).collect();
    let per_row: Vec<f64> = (0..dtm.n_rows())
        .into_par_iter()
        .map(|i| {
            let a = dtm.row_sums()[i] as f64 / n;
            let mut dense = vec![0.0; b.len()];
            for (j, c) in dtm.row(i) {
                dense[j] = c as f64 / n;
            }
            dense
                .iter()
                .zip(&b)
                .map(|(p, bj)| {
                    let e = a * bj;
                    (p - e) * (p - e) / e
                })
                .sum()
        })
        .collect();
    Ok(per_row.iter().sum())
}

/// A fitted correspondence analysis.
#[derive(Debug, Clone)]
pub struct CaModel {
    pub doc_ids: Vec<String>,
    pub terms: Vec<String>,
    pub row_masses: Vec<f64>,
    pub col_masses: Vec<f64>,
    /// Leading singular values of the residual matrix, descending.
    pub singular_values: Vec<f64>,
    /// `n × d` principal coordinates of documents.
    pub row_coords: DMatrix<f64>,
    /// `p × d` principal coordinates of terms.
    pub col_coords: DMatrix<f64>,
    pub total_inertia: f64,
    pub iterations: usize,
}

impl CaModel {
    pub fn dims(&self) -> usize {
        self.singular_values.len()
    }

    /// Share of total inertia carried by each retained dimension.
    pub fn explained_inertia(&self) -> Vec<f64> {
        self.singular_values
            .iter()
            .map(|s| {
                if self.total_inertia > 0.0 {
                    s * s / self.total_inertia
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Standard coordinate of row `i` on dimension `k` (`D_a^{-1/2} U`).
    pub fn row_standard(&self, i: usize, k: usize) -> f64 {
        let s = self.singular_values[k];
        if s > 0.0 {
            self.row_coords[(i, k)] / s
        } else {
            0.0
        }
    }

    pub fn col_standard(&self, j: usize, k: usize) -> f64 {
        let s = self.singular_values[k];
        if s > 0.0 {
            self.col_coords[(j, k)] / s
        } else {
            0.0
        }
    }

    pub fn row_index(&self, doc_id: &str) -> Option<usize> {
        self.doc_ids.iter().position(|d| d == doc_id)
    }
}

/// Model plus the rows and columns removed for having zero marginals.
#[derive(Debug, Clone)]
pub struct CaFit {
    pub model: CaModel,
    pub dropped_rows: Vec<String>,
    pub dropped_cols: Vec<String>,
}

pub fn fit_ca(dtm: &SparseDtm, dims: usize, opts: &SvdOptions) -> Result<CaFit> {
    let keep_rows: Vec<usize> = (0..dtm.n_rows()).filter(|&i| dtm.row_sums()[i] > 0).collect();
    let keep_cols: Vec<usize> = (0..dtm.n_cols()).filter(|&j| dtm.col_sums()[j] > 0).collect();
    let dropped_rows: Vec<String> = (0..dtm.n_rows())
        .filter(|&i| dtm.row_sums()[i] == 0)
        .map(|i| dtm.doc_ids()[i].clone())
        .collect();
    let dropped_cols: Vec<String> = (0..dtm.n_cols())
        .filter(|&j| dtm.col_sums()[j] == 0)
        .map(|j| dtm.terms()[j].clone())
        .collect();
    if !dropped_rows.is_empty() || !dropped_cols.is_empty() {
        log::warn!(
            "correspondence analysis drops {} empty row(s) and {} empty column(s)",
            dropped_rows.len(),
            dropped_cols.len()
        );
    }
    let trimmed;
    let x = if dropped_rows.is_empty() && dropped_cols.is_empty() {
        dtm
    } else {
        trimmed = dtm.select(&keep_rows, &keep_cols)?;
        &trimmed
    };

    let (n, p) = (x.n_rows(), x.n_cols());
    if dims == 0 || n < 2 || p < 2 || dims > n.min(p) - 1 {
        return Err(Error::Invalid(format!(
            "cannot retain {dims} dimension(s) from a {n}x{p} table (at most min(n, p) - 1)"
        )));
    }
    let op = ResidualOperator::new(x)?;
    let svd = truncated_svd(&op, dims, opts)?;
    let inertia = total_inertia(x)?;

    let row_coords = DMatrix::from_fn(n, dims, |i, k| svd.u[(i, k)] * op.inv_sqrt_row[i] * svd.values[k]);
    let col_coords = DMatrix::from_fn(p, dims, |j, k| svd.v[(j, k)] * op.inv_sqrt_col[j] * svd.values[k]);
    let model = CaModel {
        doc_ids: x.doc_ids().to_vec(),
        terms: x.terms().to_vec(),
        row_masses: op.sqrt_row_mass.iter().map(|s| s * s).collect(),
        col_masses: op.sqrt_col_mass.iter().map(|s| s * s).collect(),
        singular_values: svd.values,
        row_coords,
        col_coords,
        total_inertia: inertia,
        iterations: svd.iterations,
    };
    Ok(CaFit {
        model,
        dropped_rows,
        dropped_cols,
    })
}

/// Group barycenters in principal coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupplementaryPoints {
    pub points: BTreeMap<String, Vec<f64>>,
    /// Labels whose group had no member rows.
    pub skipped: Vec<String>,
}

/// Projects groups of documents (e.g. by year) into the fitted space. Each
/// point is the mass-weighted barycenter of its members' standard
/// coordinates, scaled by the singular values.
pub fn project_supplementary(model: &CaModel, grouping: &BTreeMap<String, Vec<String>>) -> Result<SupplementaryPoints> {
    let index: std::collections::HashMap<&str, usize> =
        model.doc_ids.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();
    let d = model.dims();
    let mut points = BTreeMap::new();
    let mut skipped = Vec::new();
    for (label, members) in grouping {
        if members.is_empty() {
            log::warn!("supplementary group {label:?} is empty; skipped");
            skipped.push(label.clone());
            continue;
        }
        let mut mass = 0.0;
        let mut acc = vec![0.0; d];
        for id in members {
            let &i = index
                .get(id.as_str())
                .ok_or_else(|| Error::NotFound(format!("document {id:?} is not in the fitted model")))?;
            let m = model.row_masses[i];
            mass += m;
            for (k, a) in acc.iter_mut().enumerate() {
                *a += m * model.row_standard(i, k);
            }
        }
        let point = acc
            .iter()
            .zip(&model.singular_values)
            .map(|(a, s)| a / mass * s)
            .collect();
        points.insert(label.clone(), point);
    }
    Ok(SupplementaryPoints { points, skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepresentativeDocument {
    pub doc_id: String,
    /// Euclidean norm of the document's principal coordinates.
    pub score: f64,
}

/// Documents ranked by the magnitude of their principal coordinates,
/// descending; ties go to the smaller id.
pub fn representative_documents(model: &CaModel, top_n: usize) -> Vec<RepresentativeDocument> {
    let mut ranked: Vec<RepresentativeDocument> = (0..model.doc_ids.len())
        .map(|i| RepresentativeDocument {
            doc_id: model.doc_ids[i].clone(),
            score: model.row_coords.row(i).norm(),
        })
        .collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
    ranked.truncate(top_n);
    ranked
}
