//! Reference solvers that work on the primal problems directly.
//!
//! The kernel matrix is factored as `K = Φ Φᵀ` by a symmetric eigendecomposition,
//! and each training problem is written in slack form over `(w, ξ)` and solved by
//! a log-barrier interior-point method. These solvers share no code with the dual
//! path and are used to cross-check it.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::losses::{aen_eps_loss, hinge_loss, pinball_eps_loss, LossParams};

/// `min ½ xᵀPx + cᵀx` subject to `Ax <= b`.
#[derive(Debug, Clone)]
pub struct BarrierQp {
    pub p: DMatrix<f64>,
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl BarrierQp {
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.c.dot(x)
    }

    fn slack(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.b - &self.a * x
    }
}

/// Solves a [`BarrierQp`] from a strictly feasible `x0` until the barrier
/// duality-gap bound `m/t` drops below `gap`.
pub fn barrier_solve(prob: &BarrierQp, x0: DVector<f64>, gap: f64) -> Result<DVector<f64>> {
    let m = prob.b.len() as f64;
    if prob.slack(&x0).iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidParameter("barrier start is not strictly feasible".into()));
    }
    let mut x = x0;
    let mut t = 1.0;
    for _ in 0..200 {
        newton_centre(prob, &mut x, t)?;
        if m / t < gap {
            return Ok(x);
        }
        t *= 10.0;
    }
    Ok(x)
}

fn newton_centre(prob: &BarrierQp, x: &mut DVector<f64>, t: f64) -> Result<()> {
    let value = |x: &DVector<f64>| -> Option<f64> {
        let s = prob.slack(x);
        if s.iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        Some(t * prob.objective(x) - s.iter().map(|v| v.ln()).sum::<f64>())
    };
    for _ in 0..100 {
        let s = prob.slack(x);
        let inv: DVector<f64> = s.map(|v| 1.0 / v);
        let grad = (&prob.p * &*x + &prob.c) * t + prob.a.transpose() * &inv;
        let scaled = DMatrix::from_fn(prob.a.nrows(), prob.a.ncols(), |i, j| prob.a[(i, j)] * inv[i]);
        let hess = &prob.p * t + scaled.transpose() * &scaled;
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&(-&grad)),
            None => hess
                .lu()
                .solve(&(-&grad))
                .ok_or_else(|| Error::InvalidParameter("singular barrier Hessian".into()))?,
        };
        let decrement = -grad.dot(&step);
        if !decrement.is_finite() {
            return Err(Error::NonFinite(0));
        }
        if decrement / 2.0 <= 1e-12 {
            return Ok(());
        }
        let f0 = value(x).expect("iterate is feasible");
        let mut alpha = 1.0;
        loop {
            let cand = &*x + &step * alpha;
            if let Some(f) = value(&cand) {
                if f <= f0 - 0.25 * alpha * decrement {
                    *x = cand;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-16 {
                return Ok(());
            }
        }
    }
    Ok(())
}

/// Rows `φ_i` with `φ_i·φ_j = K_ij`, dropping eigenvalues at or below `1e-12 · λ_max`.
pub fn feature_map(kernel: &Array2<f64>) -> Result<Array2<f64>> {
    let n = kernel.nrows();
    if kernel.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: kernel.ncols() });
    }
    let k = DMatrix::from_fn(n, n, |i, j| 0.5 * (kernel[[i, j]] + kernel[[j, i]]));
    let eig = k.symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n).filter(|&j| eig.eigenvalues[j] > 1e-12 * top.max(1e-300)).collect();
    let mut phi = Array2::zeros((n, keep.len()));
    for (c, &j) in keep.iter().enumerate() {
        let s = eig.eigenvalues[j].sqrt();
        for i in 0..n {
            phi[[i, c]] = eig.eigenvectors[(i, j)] * s;
        }
    }
    Ok(phi)
}

/// Primal optimum found by a reference solver.
#[derive(Debug, Clone)]
pub struct PrimalOptimum {
    pub objective: f64,
    /// Weight vector in the coordinates of [`feature_map`].
    pub w: Vec<f64>,
    /// Margins `1 - y_i f(x_i)`.
    pub margins: Vec<f64>,
}

const GAP: f64 = 1e-10;

struct SlackLayout {
    n: usize,
    r: usize,
    slacks_per_sample: usize,
}

impl SlackLayout {
    fn dim(&self) -> usize {
        self.r + self.n * self.slacks_per_sample
    }

    fn slack(&self, i: usize, k: usize) -> usize {
        self.r + k * self.n + i
    }
}

fn check(kernel: &Array2<f64>, labels: &[i8]) -> Result<Array2<f64>> {
    if kernel.nrows() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), got: kernel.nrows() });
    }
    feature_map(kernel)
}

/// Rows of `y_i φ_i`; each margin constraint is linear in `w` through them.
fn signed_rows(phi: &Array2<f64>, labels: &[i8]) -> Vec<Vec<f64>> {
    phi.rows()
        .into_iter()
        .zip(labels)
        .map(|(r, &y)| r.iter().map(|v| f64::from(y) * v).collect())
        .collect()
}

fn finish(prob: &BarrierQp, x: &DVector<f64>, phi_y: &[Vec<f64>], r: usize, loss: impl Fn(usize, f64) -> f64) -> PrimalOptimum {
    let w: Vec<f64> = x.iter().take(r).copied().collect();
    let margins: Vec<f64> = phi_y
        .iter()
        .map(|row| 1.0 - row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let objective = reg + margins.iter().enumerate().map(|(i, &z)| loss(i, z)).sum::<f64>();
    debug_assert!(prob.objective(x).is_finite());
    PrimalOptimum { objective, w, margins }
}

/// `min ½|w|² + Σ ω_i L(1 - y_i wᵀφ_i)` with `L` the ε-insensitive asymmetric
/// elastic net loss.
pub fn weighted_aen_primal(kernel: &Array2<f64>, labels: &[i8], omega: &[f64], loss: &LossParams) -> Result<PrimalOptimum> {
    let phi = check(kernel, labels)?;
    let n = labels.len();
    if omega.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: omega.len() });
    }
    let lay = SlackLayout { n, r: phi.ncols(), slacks_per_sample: 2 };
    let (p, tau, eps) = (loss.p, loss.tau, loss.eps);
    let dim = lay.dim();
    let mut pm = DMatrix::zeros(dim, dim);
    let mut c = DVector::zeros(dim);
    for j in 0..lay.r {
        pm[(j, j)] = 1.0;
    }
    for i in 0..n {
        let (sp, sm) = (lay.slack(i, 0), lay.slack(i, 1));
        pm[(sp, sp)] = omega[i] * p;
        pm[(sm, sm)] = omega[i] * tau * p;
        c[sp] = omega[i] * (1.0 - p);
        c[sm] = omega[i] * tau * (1.0 - p);
    }
    let phi_y = signed_rows(&phi, labels);
    let mut a = DMatrix::zeros(4 * n, dim);
    let mut b = DVector::zeros(4 * n);
    for i in 0..n {
        let (sp, sm) = (lay.slack(i, 0), lay.slack(i, 1));
        // ξ₊ >= 1 - ε - y wᵀφ
        for j in 0..lay.r {
            a[(i, j)] = -phi_y[i][j];
            a[(n + i, j)] = phi_y[i][j];
        }
        a[(i, sp)] = -1.0;
        b[i] = -(1.0 - eps);
        // ξ₋ >= y wᵀφ - 1 - ε/τ
        a[(n + i, sm)] = -1.0;
        b[n + i] = 1.0 + eps / tau;
        a[(2 * n + i, sp)] = -1.0;
        a[(3 * n + i, sm)] = -1.0;
    }
    let mut x0 = DVector::zeros(dim);
    for i in 0..n {
        x0[lay.slack(i, 0)] = (1.0 - eps).max(0.0) + 1.0;
        x0[lay.slack(i, 1)] = 1.0;
    }
    let prob = BarrierQp { p: pm, c, a, b };
    let x = barrier_solve(&prob, x0, GAP)?;
    Ok(finish(&prob, &x, &phi_y, lay.r, |i, z| omega[i] * aen_eps_loss(z, p, tau, eps)))
}

/// `min ½|w|² + C Σ max(0, z_i - ε, -τ z_i - ε)`.
pub fn pinball_primal(kernel: &Array2<f64>, labels: &[i8], c: f64, tau: f64, eps: f64) -> Result<PrimalOptimum> {
    linear_slack_primal(kernel, labels, c, &[(1.0, eps), (-tau, eps)], |z| c * pinball_eps_loss(z, tau, eps))
}

/// `min ½|w|² + C Σ max(0, z_i)`.
pub fn hinge_primal(kernel: &Array2<f64>, labels: &[i8], c: f64) -> Result<PrimalOptimum> {
    linear_slack_primal(kernel, labels, c, &[(1.0, 0.0)], |z| c * hinge_loss(z))
}

/// Losses `max(0, max_k (s_k z - o_k))` with one slack per sample.
fn linear_slack_primal(
    kernel: &Array2<f64>,
    labels: &[i8],
    c: f64,
    pieces: &[(f64, f64)],
    loss: impl Fn(f64) -> f64,
) -> Result<PrimalOptimum> {
    let phi = check(kernel, labels)?;
    let n = labels.len();
    let lay = SlackLayout { n, r: phi.ncols(), slacks_per_sample: 1 };
    let dim = lay.dim();
    let mut pm = DMatrix::zeros(dim, dim);
    let mut cv = DVector::zeros(dim);
    for j in 0..lay.r {
        pm[(j, j)] = 1.0;
    }
    for i in 0..n {
        cv[lay.slack(i, 0)] = c;
    }
    let phi_y = signed_rows(&phi, labels);
    let rows = n * (pieces.len() + 1);
    let mut a = DMatrix::zeros(rows, dim);
    let mut b = DVector::zeros(rows);
    // ξ >= s (1 - y wᵀφ) - o  <=>  -s y wᵀφ - ξ <= o - s
    for (k, &(s, o)) in pieces.iter().enumerate() {
        for i in 0..n {
            let row = k * n + i;
            for j in 0..lay.r {
                a[(row, j)] = -s * phi_y[i][j];
            }
            a[(row, lay.slack(i, 0))] = -1.0;
            b[row] = o - s;
        }
    }
    let base = pieces.len() * n;
    for i in 0..n {
        a[(base + i, lay.slack(i, 0))] = -1.0;
    }
    let mut x0 = DVector::zeros(dim);
    let start = pieces.iter().map(|&(s, o)| (s - o).abs()).fold(0.0, f64::max) + 1.0;
    for i in 0..n {
        x0[lay.slack(i, 0)] = start;
    }
    let prob = BarrierQp { p: pm, c: cv, a, b };
    let x = barrier_solve(&prob, x0, GAP)?;
    Ok(finish(&prob, &x, &phi_y, lay.r, |_, z| loss(z)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn barrier_matches_closed_form_box() {
        // min ½(x-2)² s.t. x <= 1  -> x = 1
        let prob = BarrierQp {
            p: DMatrix::from_element(1, 1, 1.0),
            c: DVector::from_element(1, -2.0),
            a: DMatrix::from_element(1, 1, 1.0),
            b: DVector::from_element(1, 1.0),
        };
        let x = barrier_solve(&prob, DVector::from_element(1, 0.0), 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn feature_map_reproduces_kernel() {
        let k = array![[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]];
        let phi = feature_map(&k).unwrap();
        let back = phi.dot(&phi.t());
        for (a, b) in back.iter().zip(k.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hinge_single_point() {
        // K = 1, y = 1: min ½w² + C max(0, 1 - w) -> w = min(C, 1)
        let k = array![[1.0]];
        let sol = hinge_primal(&k, &[1], 0.5).unwrap();
        assert!((sol.objective - (0.125 + 0.25)).abs() < 1e-8);
        let sol = hinge_primal(&k, &[1], 4.0).unwrap();
        assert!((sol.objective - 0.5).abs() < 1e-8);
    }

    #[test]
    fn infeasible_start_rejected() {
        let prob = BarrierQp {
            p: DMatrix::from_element(1, 1, 1.0),
            c: DVector::zeros(1),
            a: DMatrix::from_element(1, 1, 1.0),
            b: DVector::from_element(1, 0.0),
        };
        assert!(barrier_solve(&prob, DVector::from_element(1, 1.0), 1e-8).is_err());
    }
}
