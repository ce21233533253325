//! Truncated singular value decomposition of an implicit linear operator.
//!
//! The iterative path runs Golub-Kahan-Lanczos bidiagonalization with full
//! (two-pass) reorthogonalization, i.e. Lanczos on `AᵀA` driven by products
//! with `A` and `Aᵀ` only. Ritz triplets come from the projected matrix
//! `UᵀAV`, so the extraction stays exact when a fresh direction is injected
//! into the recurrence. The subspace grows until the leading singular values
//! stop moving and their explicit residuals `‖Aᵀu − σv‖` drop below
//! tolerance. After a first convergence a fresh start direction is injected
//! and the run must converge again, which catches copies of repeated singular
//! values that a single Krylov sequence cannot see.
//!
//! Small problems go through a dense decomposition instead.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Matrix-free access to `A` (`nrows × ncols`).
pub trait LinearOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `out = A · x`
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// `out = Aᵀ · y`
    fn apply_transpose(&self, y: &[f64], out: &mut [f64]);

    /// Materializes the operator column by column.
    fn to_dense(&self) -> DMatrix<f64> {
        let (n, p) = (self.nrows(), self.ncols());
        let mut m = DMatrix::zeros(n, p);
        let mut e = vec![0.0; p];
        let mut col = vec![0.0; n];
        for j in 0..p {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            m.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        m
    }
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let y = self * DVector::from_column_slice(x);
        out.copy_from_slice(y.as_slice());
    }

    fn apply_transpose(&self, y: &[f64], out: &mut [f64]) {
        let x = self.tr_mul(&DVector::from_column_slice(y));
        out.copy_from_slice(x.as_slice());
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvdMethod {
    /// Dense when `min(n, p) <= DENSE_CUTOFF`, Lanczos otherwise.
    Auto,
    Dense,
    Lanczos,
}

pub const DENSE_CUTOFF: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdOptions {
    pub method: SvdMethod,
    /// Convergence threshold on singular-value change and residual.
    pub tol: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            method: SvdMethod::Auto,
            tol: 1e-10,
            max_iterations: 1000,
            seed: 0x5eed_cafe,
        }
    }
}

/// Leading singular triplets, descending. Each pair of singular vectors is
/// signed so that the largest-magnitude entry of the left vector is positive.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub values: Vec<f64>,
    /// `n × k`
    pub u: DMatrix<f64>,
    /// `p × k`
    pub v: DMatrix<f64>,
    /// Lanczos steps taken (0 on the dense path).
    pub iterations: usize,
}

pub fn truncated_svd<A: LinearOperator>(op: &A, k: usize, opts: &SvdOptions) -> Result<TruncatedSvd> {
    let (n, p) = (op.nrows(), op.ncols());
    let full = n.min(p);
    if k == 0 || k > full {
        return Err(Error::Invalid(format!(
            "cannot extract {k} singular triplets from a {n}x{p} operator"
        )));
    }
    let dense = match opts.method {
        SvdMethod::Dense => true,
        SvdMethod::Lanczos => false,
        SvdMethod::Auto => full <= DENSE_CUTOFF,
    };
    let mut out = if dense {
        dense_svd(&op.to_dense(), k)
    } else {
        lanczos_svd(op, k, opts)?
    };
    fix_signs(&mut out);
    Ok(out)
}

/// All singular values of a dense matrix, descending.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    thin_svd(m).0
}

/// Thin SVD `(σ descending, U, V)` computed by faer. nalgebra's
/// `svd(true, true)` returned a non-reconstructing factorization on small
/// wide matrices, so it is not used here.
fn thin_svd(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (n, p) = m.shape();
    let r = n.min(p);
    if r == 0 {
        return (Vec::new(), DMatrix::zeros(n, 0), DMatrix::zeros(p, 0));
    }
    let fm = faer::Mat::<f64>::from_fn(n, p, |i, j| m[(i, j)]);
    let svd = fm.thin_svd().expect("dense SVD did not converge");
    let (su, ss, sv) = (svd.U(), svd.S(), svd.V());
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| ss[b].total_cmp(&ss[a]));
    (
        order.iter().map(|&i| ss[i]).collect(),
        DMatrix::from_fn(n, r, |i, c| su[(i, order[c])]),
        DMatrix::from_fn(p, r, |j, c| sv[(j, order[c])]),
    )
}

fn dense_svd(m: &DMatrix<f64>, k: usize) -> TruncatedSvd {
    let (values, u, v) = thin_svd(m);
    TruncatedSvd {
        values: values[..k].to_vec(),
        u: u.columns(0, k).into_owned(),
        v: v.columns(0, k).into_owned(),
        iterations: 0,
    }
}

fn fix_signs(svd: &mut TruncatedSvd) {
    for c in 0..svd.values.len() {
        let col = svd.u.column(c);
        let mut best = 0;
        for r in 0..col.len() {
            if col[r].abs() > col[best].abs() {
                best = r;
            }
        }
        if !col.is_empty() && col[best] < 0.0 {
            svd.u.column_mut(c).neg_mut();
            svd.v.column_mut(c).neg_mut();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two passes of classical Gram-Schmidt against `basis`.
fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(x, b);
            x.iter_mut().zip(b).for_each(|(xi, bi)| *xi -= c * bi);
        }
    }
}

/// A unit vector orthogonal to `basis`, or `None` if the basis spans the space.
fn fresh_direction(rng: &mut ChaCha8Rng, dim: usize, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    if basis.len() >= dim {
        return None;
    }
    for _ in 0..8 {
        let mut x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
        orthogonalize(&mut x, basis);
        let nx = norm(&x);
        if nx > 1e-8 {
            x.iter_mut().for_each(|v| *v /= nx);
            return Some(x);
        }
    }
    None
}

fn lanczos_svd<A: LinearOperator>(op: &A, k: usize, opts: &SvdOptions) -> Result<TruncatedSvd> {
    let (n, p) = (op.nrows(), op.ncols());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // Orthonormal bases with A·V ⊆ span(U); `h[i][j] = u_i · A v_j`.
    let mut us: Vec<Vec<f64>> = Vec::new();
    let mut vs: Vec<Vec<f64>> = Vec::new();
    let mut avs: Vec<Vec<f64>> = Vec::new();
    let mut h: Vec<Vec<f64>> = Vec::new();

    let mut next_v = fresh_direction(&mut rng, p, &[]);
    let mut scale = 0.0f64; // running lower bound on ||A||
    let mut previous: Option<Vec<f64>> = None;
    let mut converged_once = false;
    let mut buf_n = vec![0.0; n];
    let mut buf_p = vec![0.0; p];

    for step in 0..opts.max_iterations {
        let Some(v) = next_v.take() else {
            break;
        };
        op.apply(&v, &mut buf_n);
        let av = buf_n.clone();
        scale = scale.max(norm(&av));
        let breakdown = 1e-12 * scale;
        for (i, u) in us.iter().enumerate() {
            h[i].push(dot(u, &av));
        }
        vs.push(v);
        avs.push(av);

        // extend U with the part of A v not yet covered
        let mut u = avs.last().unwrap().clone();
        orthogonalize(&mut u, &us);
        let nu = norm(&u);
        if nu > breakdown && us.len() < n {
            u.iter_mut().for_each(|x| *x /= nu);
            h.push(avs.iter().map(|av| dot(&u, av)).collect());
            us.push(u);
        }

        let exhausted = vs.len() >= p;
        if vs.len() >= k || exhausted {
            let ritz = ritz_triplets(&us, &vs, &h, k);
            let tol = opts.tol * scale.max(1.0);
            let stable = previous
                .as_ref()
                .is_some_and(|prev| prev.iter().zip(&ritz.values).all(|(a, b)| (a - b).abs() <= tol));
            // a vanishing Ritz value among the leading k is trusted only once
            // the right space is exhausted
            let plausible = ritz.values.iter().all(|&s| s > tol);
            let residual_ok = stable && plausible && {
                (0..k).all(|c| {
                    let u = ritz.u.column(c);
                    op.apply_transpose(u.as_slice(), &mut buf_p);
                    let v = ritz.v.column(c);
                    let r: f64 = buf_p
                        .iter()
                        .zip(v.iter())
                        .map(|(a, b)| (a - ritz.values[c] * b).powi(2))
                        .sum();
                    r.sqrt() <= tol
                })
            };
            if exhausted || (residual_ok && converged_once) {
                return Ok(TruncatedSvd {
                    iterations: step + 1,
                    ..ritz
                });
            }
            if residual_ok {
                // restart from an unexplored direction and require a second
                // convergence to the same values
                converged_once = true;
                previous = Some(ritz.values);
                next_v = fresh_direction(&mut rng, p, &vs);
                continue;
            }
            previous = Some(ritz.values);
        }

        // Golub-Kahan step: next direction from Aᵀ u_last
        let mut w = match us.last() {
            Some(u) => {
                op.apply_transpose(u, &mut buf_p);
                buf_p.clone()
            }
            None => vec![0.0; p],
        };
        orthogonalize(&mut w, &vs);
        let nw = norm(&w);
        next_v = if nw > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            w.iter_mut().for_each(|x| *x /= nw);
            Some(w)
        } else {
            fresh_direction(&mut rng, p, &vs)
        };
    }
    if vs.len() >= p {
        let ritz = ritz_triplets(&us, &vs, &h, k);
        return Ok(TruncatedSvd {
            iterations: vs.len(),
            ..ritz
        });
    }
    Err(Error::Convergence {
        iterations: opts.max_iterations,
    })
}

/// Leading `k` singular triplets of the projected matrix, lifted back.
fn ritz_triplets(us: &[Vec<f64>], vs: &[Vec<f64>], h: &[Vec<f64>], k: usize) -> TruncatedSvd {
    let (mu, mv) = (us.len(), vs.len());
    let n = us.first().map_or(0, Vec::len);
    let p = vs[0].len();
    // pad to at least k×k so the decomposition yields k triplets
    let rows = mu.max(k);
    let cols = mv.max(k);
    let hm = DMatrix::from_fn(rows, cols, |i, j| if i < mu && j < mv { h[i][j] } else { 0.0 });
    let (values, hu, hv) = thin_svd(&hm);
    let u = DMatrix::from_fn(n, k, |r, c| (0..mu).map(|j| us[j][r] * hu[(j, c)]).sum());
    let v = DMatrix::from_fn(p, k, |r, c| (0..mv).map(|j| vs[j][r] * hv[(j, c)]).sum());
    TruncatedSvd {
        values: values[..k].to_vec(),
        u,
        v,
        iterations: 0,
    }
}
