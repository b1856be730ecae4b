//! Box-constrained convex quadratic programs.
//!
//! Problems have the form `min ½ uᵀHu - qᵀu` subject to `lo <= u <= hi`.
//! [`clipdcd_solve`] is the production solver: greedy clipped coordinate
//! descent that keeps the residual `r = q - Hu` up to date in `O(d)` per
//! update. [`qp_oracle`] is a plain projected-gradient method kept for
//! verification.

use crate::error::{Error, Result};

/// Symmetric matrix accessed by entries and columns.
pub trait Hessian: Sync {
    fn dim(&self) -> usize;

    fn entry(&self, i: usize, j: usize) -> f64;

    fn diag(&self, i: usize) -> f64 {
        self.entry(i, i)
    }

    /// `out[k] += scale * H[k][j]` for every `k`.
    fn axpy_column(&self, j: usize, scale: f64, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o += scale * self.entry(k, j);
        }
    }

    /// `H u`.
    fn mul(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (j, &uj) in u.iter().enumerate() {
            if uj != 0.0 {
                self.axpy_column(j, uj, &mut out);
            }
        }
        out
    }
}

/// Dense symmetric matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHessian {
    dim: usize,
    data: Vec<f64>,
}

impl DenseHessian {
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(Self {
            dim,
            data: rows.concat(),
        })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    /// Materializes any [`Hessian`] entry by entry.
    pub fn materialize(h: &impl Hessian) -> Self {
        Self::from_fn(h.dim(), |i, j| h.entry(i, j))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

impl Hessian for DenseHessian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    fn axpy_column(&self, j: usize, scale: f64, out: &mut [f64]) {
        // symmetric: column j is row j
        for (o, h) in out.iter_mut().zip(self.row(j)) {
            *o += scale * h;
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpProblem<H> {
    pub h: H,
    pub q: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl<H: Hessian> QpProblem<H> {
    pub fn new(h: H, q: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let d = h.dim();
        for len in [q.len(), lo.len(), hi.len()] {
            if len != d {
                return Err(Error::DimensionMismatch { expected: d, got: len });
            }
        }
        if let Some(i) = (0..d).find(|&i| !(lo[i] <= hi[i])) {
            return Err(Error::InvalidParameter(format!(
                "box bound lo[{i}] = {} exceeds hi[{i}] = {}",
                lo[i], hi[i]
            )));
        }
        Ok(Self { h, q, lo, hi })
    }

    /// Problem with `0 <= u` and no upper bound.
    pub fn nonnegative(h: H, q: Vec<f64>) -> Result<Self> {
        let d = h.dim();
        Self::new(h, q, vec![0.0; d], vec![f64::INFINITY; d])
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn objective(&self, u: &[f64]) -> f64 {
        let hu = self.h.mul(u);
        u.iter().zip(&hu).map(|(a, b)| 0.5 * a * b).sum::<f64>() - dot(&self.q, u)
    }

    /// Largest projected-gradient magnitude, `max_i |clip(u_i - g_i) - u_i|` with `g = Hu - q`.
    pub fn kkt_residual(&self, u: &[f64]) -> f64 {
        let hu = self.h.mul(u);
        (0..self.dim())
            .map(|i| {
                let g = hu[i] - self.q[i];
                ((u[i] - g).clamp(self.lo[i], self.hi[i]) - u[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    fn clip_into_box(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, &v)| v.clamp(self.lo[i], self.hi[i]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub u: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit before the tolerance was met.
    pub converged: bool,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Default iteration cap for a problem of dimension `d`.
pub fn default_max_iter(d: usize) -> usize {
    50 * d.max(1)
}

/// Solves the problem from the origin (clipped into the box).
pub fn clipdcd_solve<H: Hessian>(prob: &QpProblem<H>, tol: f64, max_iter: usize) -> Result<QpSolution> {
    clipdcd_solve_from(prob, None, tol, max_iter, None)
}

/// Clipped dual coordinate descent with greedy coordinate choice.
///
/// Each iteration evaluates, for every coordinate, the exact clipped
/// one-dimensional minimizer `clip(u_i + r_i / H_ii)` and the objective
/// decrease it would give, then applies the best one (lowest index on ties).
/// Stops when the projected-gradient infinity norm is at most `tol` or after
/// `max_iter` updates. `trace`, when given, receives the objective after
/// every update.
pub fn clipdcd_solve_from<H: Hessian>(
    prob: &QpProblem<H>,
    start: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<QpSolution> {
    let d = prob.dim();
    let diag: Vec<f64> = (0..d).map(|i| prob.h.diag(i)).collect();
    if let Some((index, &value)) = diag.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositiveDiagonal { index, value });
    }
    let mut u = match start {
        Some(s) if s.len() == d => prob.clip_into_box(s),
        Some(s) => return Err(Error::DimensionMismatch { expected: d, got: s.len() }),
        None => prob.clip_into_box(&vec![0.0; d]),
    };
    let hu = prob.h.mul(&u);
    let mut r: Vec<f64> = prob.q.iter().zip(&hu).map(|(q, h)| q - h).collect();
    let mut objective = -0.5 * u.iter().zip(prob.q.iter().zip(&r)).map(|(a, (q, r))| a * (q + r)).sum::<f64>();

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut best = usize::MAX;
        let mut best_gain = 0.0;
        let mut best_step = 0.0;
        let mut best_target = 0.0;
        let mut max_pg: f64 = 0.0;
        for i in 0..d {
            let target = (u[i] + r[i] / diag[i]).clamp(prob.lo[i], prob.hi[i]);
            let step = target - u[i];
            let pg = ((u[i] + r[i]).clamp(prob.lo[i], prob.hi[i]) - u[i]).abs();
            max_pg = max_pg.max(pg);
            if step != 0.0 {
                let gain = step * (r[i] - 0.5 * diag[i] * step);
                if gain > best_gain {
                    best_gain = gain;
                    best = i;
                    best_step = step;
                    best_target = target;
                }
            }
        }
        if !max_pg.is_finite() {
            return Err(Error::NonFinite(iterations));
        }
        if max_pg <= tol {
            converged = true;
            break;
        }
        if iterations >= max_iter || best == usize::MAX {
            break;
        }
        u[best] = best_target;
        prob.h.axpy_column(best, -best_step, &mut r);
        objective -= best_gain;
        iterations += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(objective);
        }
    }

    let hu = prob.h.mul(&u);
    let objective = 0.5 * dot(&u, &hu) - dot(&prob.q, &u);
    if !objective.is_finite() {
        return Err(Error::NonFinite(iterations));
    }
    let kkt_residual = (0..d)
        .map(|i| {
            let g = hu[i] - prob.q[i];
            ((u[i] - g).clamp(prob.lo[i], prob.hi[i]) - u[i]).abs()
        })
        .fold(0.0, f64::max);
    Ok(QpSolution {
        u,
        objective,
        kkt_residual,
        iterations,
        converged,
    })
}

/// Projected-gradient descent with a fixed `1/L` step, `L` the Gershgorin
/// bound on the largest eigenvalue of `H`. Used to cross-check
/// [`clipdcd_solve`]; slow but independent of it.
pub fn qp_oracle<H: Hessian>(prob: &QpProblem<H>, tol: f64) -> Result<QpSolution> {
    const MAX_ITER: usize = 5_000_000;
    let d = prob.dim();
    let lipschitz = (0..d)
        .map(|i| (0..d).map(|j| prob.h.entry(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 };
    let mut u = prob.clip_into_box(&vec![0.0; d]);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        let hu = prob.h.mul(&u);
        let mut max_pg: f64 = 0.0;
        let mut next = Vec::with_capacity(d);
        for i in 0..d {
            let g = hu[i] - prob.q[i];
            max_pg = max_pg.max(((u[i] - g).clamp(prob.lo[i], prob.hi[i]) - u[i]).abs());
            next.push((u[i] - step * g).clamp(prob.lo[i], prob.hi[i]));
        }
        if !max_pg.is_finite() {
            return Err(Error::NonFinite(iterations));
        }
        if max_pg <= tol {
            converged = true;
            break;
        }
        u = next;
        iterations += 1;
    }
    let objective = prob.objective(&u);
    let kkt_residual = prob.kkt_residual(&u);
    Ok(QpSolution {
        u,
        objective,
        kkt_residual,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(d: usize) -> DenseHessian {
        DenseHessian::diagonal(&vec![1.0; d])
    }

    #[test]
    fn separable_sign_determined() {
        let prob = QpProblem::nonnegative(identity(2), vec![1.0, -1.0]).unwrap();
        let sol = clipdcd_solve(&prob, 1e-12, 100).unwrap();
        assert_eq!(sol.u, vec![1.0, 0.0]);
        assert_eq!(sol.objective, -0.5);
        assert!(sol.converged);
        let oracle = qp_oracle(&prob, 1e-12).unwrap();
        assert!((oracle.u[0] - 1.0).abs() < 1e-12 && oracle.u[1] == 0.0);
    }

    #[test]
    fn separable_scaled_diagonal() {
        let prob = QpProblem::nonnegative(DenseHessian::diagonal(&[2.0, 2.0]), vec![4.0, 2.0]).unwrap();
        let sol = clipdcd_solve(&prob, 1e-12, 100).unwrap();
        assert_eq!(sol.u, vec![2.0, 1.0]);
        let oracle = qp_oracle(&prob, 1e-12).unwrap();
        assert!((oracle.u[0] - 2.0).abs() < 1e-11 && (oracle.u[1] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn pinned_box_returns_bound() {
        let h = DenseHessian::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let prob = QpProblem::new(h, vec![5.0, -7.0], vec![0.25, -1.5], vec![0.25, -1.5]).unwrap();
        assert_eq!(clipdcd_solve(&prob, 1e-10, 10).unwrap().u, vec![0.25, -1.5]);
        assert_eq!(qp_oracle(&prob, 1e-10).unwrap().u, vec![0.25, -1.5]);
    }

    #[test]
    fn rejects_nonpositive_diagonal() {
        let h = DenseHessian::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let prob = QpProblem::nonnegative(h, vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            clipdcd_solve(&prob, 1e-8, 10),
            Err(Error::NonPositiveDiagonal { index: 1, .. })
        ));
    }

    #[test]
    fn rejects_inverted_box_and_bad_lengths() {
        assert!(QpProblem::new(identity(1), vec![0.0], vec![1.0], vec![0.0]).is_err());
        assert!(QpProblem::new(identity(2), vec![0.0], vec![0.0; 2], vec![1.0; 2]).is_err());
    }

    #[test]
    fn non_finite_input_is_reported() {
        let prob = QpProblem::nonnegative(identity(2), vec![f64::NAN, 1.0]).unwrap();
        assert!(matches!(clipdcd_solve(&prob, 1e-8, 10), Err(Error::NonFinite(_))));
    }

    #[test]
    fn iteration_cap_flags_nonconvergence() {
        let h = DenseHessian::from_rows(&[vec![1.0, 0.99], vec![0.99, 1.0]]).unwrap();
        let prob = QpProblem::nonnegative(h, vec![1.0, 1.0]).unwrap();
        let sol = clipdcd_solve(&prob, 1e-14, 1).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(!sol.converged);
    }

    #[test]
    fn warm_start_at_optimum_takes_no_steps() {
        let prob = QpProblem::nonnegative(DenseHessian::diagonal(&[2.0, 2.0]), vec![4.0, 2.0]).unwrap();
        let sol = clipdcd_solve_from(&prob, Some(&[2.0, 1.0]), 1e-12, 100, None).unwrap();
        assert_eq!(sol.iterations, 0);
    }
}
