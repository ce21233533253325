//! Exploratory statistics: publications per year, quadratic trend with
//! forecast, term frequency tables and publication-type shares.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::corpus::{Corpus, DocType};
use crate::error::{Error, Result};
use crate::text::SparseDtm;

/// Publications per year, strictly increasing in year.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct YearSeries {
    points: Vec<(i32, u64)>,
}

impl YearSeries {
    pub fn new(mut points: Vec<(i32, u64)>) -> Result<Self> {
        points.sort_unstable_by_key(|p| p.0);
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Invalid("duplicate year in series".into()));
        }
        Ok(YearSeries { points })
    }

    pub fn points(&self) -> &[(i32, u64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn count(&self, year: i32) -> Option<u64> {
        self.points
            .binary_search_by_key(&year, |p| p.0)
            .ok()
            .map(|i| self.points[i].1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct YearCounts {
    pub series: YearSeries,
    /// Documents without a publication year, excluded from `series`.
    pub missing_year: usize,
}

pub fn counts_per_year(corpus: &Corpus) -> Result<YearCounts> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus("no documents to count".into()));
    }
    let mut by_year: BTreeMap<i32, u64> = BTreeMap::new();
    let mut missing = 0;
    for d in corpus.documents() {
        match d.year {
            Some(y) => *by_year.entry(y).or_default() += 1,
            None => missing += 1,
        }
    }
    if by_year.is_empty() {
        return Err(Error::EmptyCorpus("every document lacks a year".into()));
    }
    Ok(YearCounts {
        series: YearSeries {
            points: by_year.into_iter().collect(),
        },
        missing_year: missing,
    })
}

/// How the regressor was encoded when solving the least-squares problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum XEncoding {
    /// Solved directly on calendar years.
    RawYear,
    /// Solved on `(x - mean) / scale`, then expanded back to raw-year form.
    CenteredYear,
}

/// `y(x) = a2·x² + a1·x + a0` fitted by ordinary least squares.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticFit {
    /// Raw-year coefficients `(a2, a1, a0)`.
    pub coefficients: (f64, f64, f64),
    pub r_squared: f64,
    /// Overall-regression F-test with (2, n − 3) degrees of freedom.
    pub p_value: f64,
    pub x_encoding: XEncoding,
    /// Zero-variance response: `r_squared` is reported as 1.
    pub degenerate: bool,
    pub n_points: usize,
    pub x_range: (f64, f64),
    x_center: f64,
    x_scale: f64,
    // coefficients in the solved encoding
    solved: (f64, f64, f64),
}

impl QuadraticFit {
    /// Fitted value at `x`, evaluated in the encoding the fit was solved in.
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.x_center) / self.x_scale;
        let (c2, c1, c0) = self.solved;
        (c2 * u + c1) * u + c0
    }
}

/// Fits the quadratic trend on a per-year series using the centered encoding.
pub fn fit_quadratic(series: &YearSeries) -> Result<QuadraticFit> {
    let pts: Vec<(f64, f64)> = series.points().iter().map(|&(x, y)| (f64::from(x), y as f64)).collect();
    fit_quadratic_points(&pts, XEncoding::CenteredYear)
}

pub fn fit_quadratic_points(points: &[(f64, f64)], encoding: XEncoding) -> Result<QuadraticFit> {
    let n = points.len();
    if n < 4 {
        return Err(Error::InsufficientData { needed: 4, got: n });
    }
    let (x_min, x_max) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.0), hi.max(p.0))
    });
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::DegenerateDesign(format!(
            "{} distinct x value(s); a quadratic needs 3",
            distinct.len()
        )));
    }

    let (center, scale) = match encoding {
        XEncoding::RawYear => (0.0, 1.0),
        XEncoding::CenteredYear => {
            let mean = points.iter().map(|p| p.0).sum::<f64>() / n as f64;
            let half = ((x_max - x_min) / 2.0).max(f64::MIN_POSITIVE);
            (mean, half)
        }
    };

    let design = DMatrix::from_fn(n, 3, |i, j| {
        let u = (points[i].0 - center) / scale;
        u.powi(2 - j as i32)
    });
    let y = DVector::from_iterator(n, points.iter().map(|p| p.1));
    let qr = design.clone().qr();
    let qty = qr.q().transpose() * &y;
    let r = qr.r();
    let solved = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::DegenerateDesign("rank-deficient design matrix".into()))?;
    let (c2, c1, c0) = (solved[0], solved[1], solved[2]);

    // expand p(u) with u = (x - m)/s into raw powers of x
    let (d2, d1) = (c2 / (scale * scale), c1 / scale);
    let coefficients = (d2, d1 - 2.0 * d2 * center, d2 * center * center - d1 * center + c0);

    let fitted = &design * &solved;
    let mean_y = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let df_resid = (n - 3) as f64;

    let (r_squared, p_value, degenerate) = if ss_tot == 0.0 {
        (1.0, 1.0, true)
    } else {
        let r2 = (1.0 - ss_res / ss_tot).clamp(0.0, 1.0);
        let ss_reg = (ss_tot - ss_res).max(0.0);
        let p = if ss_res <= f64::EPSILON * ss_tot {
            0.0
        } else {
            let f = (ss_reg / 2.0) / (ss_res / df_resid);
            FisherSnedecor::new(2.0, df_resid)
                .map(|dist| dist.sf(f))
                .unwrap_or(f64::NAN)
                .clamp(0.0, 1.0)
        };
        (r2, p, false)
    };

    Ok(QuadraticFit {
        coefficients,
        r_squared,
        p_value,
        x_encoding: encoding,
        degenerate,
        n_points: n,
        x_range: (x_min, x_max),
        x_center: center,
        x_scale: scale,
        solved: (c2, c1, c0),
    })
}

/// Years beyond the fitted range by more than this are rejected unless
/// extrapolation is explicitly allowed.
pub const FORECAST_WINDOW: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Forecast {
    pub year: i32,
    pub value: f64,
    /// The raw prediction was negative and has been clamped to 0.
    pub clamped: bool,
}

pub fn forecast(fit: &QuadraticFit, year: i32, allow_extrapolation: bool) -> Result<Forecast> {
    let x = f64::from(year);
    let lo = fit.x_range.0 - FORECAST_WINDOW;
    let hi = fit.x_range.1 + FORECAST_WINDOW;
    if !allow_extrapolation && !(lo..=hi).contains(&x) {
        return Err(Error::Extrapolation {
            year,
            lo: lo.ceil() as i32,
            hi: hi.floor() as i32,
        });
    }
    let raw = fit.eval(x);
    Ok(Forecast {
        year,
        value: raw.max(0.0),
        clamped: raw < 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermFrequency {
    pub term: String,
    pub frequency: u64,
    pub cumulative_share: f64,
}

/// The `k` most frequent matrix columns with the running share of all
/// counted tokens.
pub fn top_terms(dtm: &SparseDtm, k: usize) -> Result<Vec<TermFrequency>> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..dtm.n_cols()).collect();
    let sums = dtm.col_sums();
    let terms = dtm.terms();
    order.sort_by(|&a, &b| sums[b].cmp(&sums[a]).then_with(|| terms[a].cmp(&terms[b])));
    let total = dtm.total();
    let mut running = 0u64;
    Ok(order
        .into_iter()
        .take(k)
        .map(|j| {
            running += sums[j];
            TermFrequency {
                term: terms[j].clone(),
                frequency: sums[j],
                cumulative_share: if total == 0 { 0.0 } else { running as f64 / total as f64 },
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeShare {
    pub doc_type: DocType,
    pub count: usize,
    pub exact_percent: f64,
    /// Integer percentage; the rounded values sum to exactly 100.
    pub percent: u32,
}

/// Publication-type shares, rounded to integers with the largest-remainder
/// method. Only types present in the corpus are listed.
pub fn type_shares(corpus: &Corpus) -> Result<Vec<TypeShare>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus("no documents to classify".into()));
    }
    let mut counts: BTreeMap<DocType, usize> = BTreeMap::new();
    for d in corpus.documents() {
        *counts.entry(d.doc_type).or_default() += 1;
    }
    let n = corpus.len();
    let mut shares: Vec<TypeShare> = counts
        .into_iter()
        .map(|(doc_type, count)| TypeShare {
            doc_type,
            count,
            exact_percent: 100.0 * count as f64 / n as f64,
            // floor(100·count / n) in exact integer arithmetic
            percent: (100 * count / n) as u32,
        })
        .collect();
    let assigned: u32 = shares.iter().map(|s| s.percent).sum();
    // remainders compared exactly as (100·count mod n)
    let mut by_remainder: Vec<usize> = (0..shares.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = (100 * shares[a].count) % n;
        let rb = (100 * shares[b].count) % n;
        rb.cmp(&ra).then(a.cmp(&b))
    });
    for &i in by_remainder.iter().take((100 - assigned) as usize) {
        shares[i].percent += 1;
    }
    Ok(shares)
}
