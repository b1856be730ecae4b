//! Per-sample block coordinate descent on the exact weighted dual.
//!
//! The four coordinates `(α_i, β_i, γ₊_i, γ₋_i)` of one sample are minimized
//! jointly and exactly. For fixed `α_i` the best `γ₊_i` is
//! `max(0, (1-p)/(p a_i) - α_i)`, and at a block minimizer one of `α_i, β_i`
//! is zero, so the block reduces to a convex piecewise quadratic in
//! `λ_i = α_i - β_i` with breakpoints `-(1-p)/(p b_i)`, `0` and
//! `(1-p)/(p a_i)`. Blocks are chosen greedily by largest KKT violation, and
//! the stopping rule is the projected-gradient test of the full `4n` problem.

use crate::error::{Error, Result};
use crate::losses::LossParams;
use crate::qp::QpSolution;

use super::dual::WeightedSubproblem;

struct Coefs {
    a: Vec<f64>,
    b: Vec<f64>,
    lin: f64,
    q_alpha: f64,
    q_beta: f64,
}

impl Coefs {
    fn new(omega: &[f64], loss: &LossParams) -> Self {
        let (p, tau, eps) = (loss.p, loss.tau, loss.eps);
        let lin = (1.0 - p) / p;
        Self {
            a: omega.iter().map(|w| 1.0 / (p * w)).collect(),
            b: omega.iter().map(|w| 1.0 / (tau * p * w)).collect(),
            lin,
            q_alpha: 1.0 - eps + lin,
            q_beta: -1.0 - eps / tau + lin,
        }
    }

    /// `min_γ ½ a (x + γ)² - lin γ` over `γ >= 0`, for `x >= 0`.
    fn huber(&self, x: f64, a: f64) -> f64 {
        if a * x >= self.lin {
            0.5 * a * x * x
        } else {
            self.lin * x - self.lin * self.lin / (2.0 * a)
        }
    }

    fn slack(&self, x: f64, a: f64) -> f64 {
        (self.lin / a - x).max(0.0)
    }

    /// Block objective without the Gram terms.
    fn psi(&self, i: usize, lambda: f64) -> f64 {
        let (al, be) = (lambda.max(0.0), (-lambda).max(0.0));
        self.huber(al, self.a[i]) + self.huber(be, self.b[i]) - self.q_alpha * al - self.q_beta * be
    }

    /// Minimizer of `½ g λ² + e λ + psi(λ)`.
    fn argmin(&self, i: usize, g: f64, e: f64) -> f64 {
        let (a, b, lin) = (self.a[i], self.b[i], self.lin);
        let right = e + lin - self.q_alpha;
        let left = e + self.q_beta - lin;
        if right < 0.0 {
            if g * lin / a + right >= 0.0 {
                -right / g
            } else {
                (self.q_alpha - e) / (g + a)
            }
        } else if left > 0.0 {
            if -g * lin / b + left <= 0.0 {
                -left / g
            } else {
                -(e + self.q_beta) / (g + b)
            }
        } else {
            0.0
        }
    }

    fn unpack(&self, lambda: &[f64]) -> Vec<f64> {
        let n = lambda.len();
        let mut u = vec![0.0; 4 * n];
        for (i, &l) in lambda.iter().enumerate() {
            let (al, be) = (l.max(0.0), (-l).max(0.0));
            u[i] = al;
            u[n + i] = be;
            u[2 * n + i] = self.slack(al, self.a[i]);
            u[3 * n + i] = self.slack(be, self.b[i]);
        }
        u
    }

    /// Projected-gradient residual of the four coordinates of sample `i`.
    fn residual(&self, i: usize, lambda: f64, gc: f64) -> f64 {
        let (a, b) = (self.a[i], self.b[i]);
        let (al, be) = (lambda.max(0.0), (-lambda).max(0.0));
        let (gp, gm) = (self.slack(al, a), self.slack(be, b));
        let pg = |u: f64, r: f64| ((u + r).max(0.0) - u).abs();
        pg(al, self.q_alpha - gc - a * (al + gp))
            .max(pg(be, self.q_beta + gc - b * (be + gm)))
            .max(pg(gp, self.lin - a * (al + gp)))
            .max(pg(gm, self.lin - b * (be + gm)))
    }
}

/// Solves the exact `4n` weighted dual. `start`, a `4n` vector, is reduced to
/// `λ = α - β`. Returns the solution in the `(α, β, γ₊, γ₋)` layout with the
/// objective of [`super::assemble_weighted_dual`] in its exact form.
pub fn solve_exact_blocks(
    sub: &WeightedSubproblem<'_>,
    loss: &LossParams,
    start: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<QpSolution> {
    let gram = sub.gram;
    let n = gram.len();
    let co = Coefs::new(&sub.omega, loss);
    let mut lambda = match start {
        Some(s) if s.len() == 4 * n => (0..n).map(|i| s[i].max(0.0) - s[n + i].max(0.0)).collect(),
        Some(s) => return Err(Error::DimensionMismatch { expected: 4 * n, got: s.len() }),
        None => vec![0.0; n],
    };
    let diag: Vec<f64> = (0..n).map(|i| gram.get(i, i)).collect();
    let mut gc = gram.mul(&lambda);

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut best = usize::MAX;
        let mut best_pg = 0.0;
        let mut best_target = 0.0;
        let mut max_pg: f64 = 0.0;
        for i in 0..n {
            let (g, l) = (diag[i], lambda[i]);
            let pg = co.residual(i, l, gc[i]);
            max_pg = max_pg.max(pg);
            if pg > best_pg {
                let target = co.argmin(i, g, gc[i] - g * l);
                if target != l {
                    best_pg = pg;
                    best = i;
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
        let step = best_target - lambda[best];
        lambda[best] = best_target;
        for (gj, row) in gc.iter_mut().zip(gram.row(best)) {
            *gj += step * row;
        }
        iterations += 1;
    }

    let gc = gram.mul(&lambda);
    let mut objective = 0.0;
    let mut kkt_residual: f64 = 0.0;
    for i in 0..n {
        objective += 0.5 * lambda[i] * gc[i] + co.psi(i, lambda[i]);
        kkt_residual = kkt_residual.max(co.residual(i, lambda[i], gc[i]));
    }
    if !objective.is_finite() {
        return Err(Error::NonFinite(iterations));
    }
    Ok(QpSolution {
        u: co.unpack(&lambda),
        objective,
        kkt_residual,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{gram_symmetric, KernelSpec};
    use crate::qp::clipdcd_solve;
    use crate::trainer::{assemble_weighted_dual, DualForm, SignedGram};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn instance(rng: &mut ChaCha8Rng, n: usize) -> (SignedGram, Vec<f64>, LossParams) {
        let x = Array2::from_shape_fn((n, 3), |_| rng.random_range(-1.5..1.5));
        let labels: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let k = gram_symmetric(x.view(), &KernelSpec::rbf(0.7));
        let omega = (0..n).map(|_| rng.random_range(0.05..4.0)).collect();
        let loss = LossParams {
            lambda: 1.0,
            eta: 1.0,
            p: rng.random_range(0.2..=1.0),
            tau: rng.random_range(0.1..=1.0),
            eps: rng.random_range(0.0..0.4),
        };
        (SignedGram::new(&k, &labels).unwrap(), omega, loss)
    }

    #[test]
    fn matches_clipdcd_on_assembled_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..15 {
            let n = rng.random_range(2..12);
            let (g, omega, loss) = instance(&mut rng, n);
            let sub = WeightedSubproblem::new(omega, &g).unwrap();
            let prob = assemble_weighted_dual(&sub, &loss, DualForm::Exact).unwrap();
            let reference = clipdcd_solve(&prob, 1e-11, 10_000_000).unwrap();
            let sol = solve_exact_blocks(&sub, &loss, None, 1e-11, 1_000_000).unwrap();
            assert!(sol.converged);
            assert!((sol.objective - prob.objective(&sol.u)).abs() < 1e-9 * (1.0 + sol.objective.abs()));
            assert!((sol.objective - reference.objective).abs() < 1e-8 * (1.0 + reference.objective.abs()));
            assert!(prob.kkt_residual(&sol.u) <= 1e-10);
        }
    }

    #[test]
    fn block_argmin_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..2000 {
            let (_, _, loss) = instance(&mut rng, 2);
            let omega = [rng.random_range(0.01..5.0)];
            let co = Coefs::new(&omega, &loss);
            let g = rng.random_range(0.0..3.0);
            let e = rng.random_range(-4.0..4.0);
            let f = |x: f64| 0.5 * g * x * x + e * x + co.psi(0, x);
            let t = co.argmin(0, g, e);
            for dx in [1e-4, -1e-4, 1e-2, -1e-2, 0.5, -0.5] {
                assert!(f(t) <= f(t + dx) + 1e-12, "g={g} e={e} t={t} dx={dx} {loss:?} {omega:?}");
            }
        }
    }

    #[test]
    fn warm_start_keeps_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (g, omega, loss) = instance(&mut rng, 8);
        let sub = WeightedSubproblem::new(omega, &g).unwrap();
        let cold = solve_exact_blocks(&sub, &loss, None, 1e-10, 100_000).unwrap();
        let warm = solve_exact_blocks(&sub, &loss, Some(&cold.u), 1e-10, 100_000).unwrap();
        assert_eq!(warm.iterations, 0);
        assert_eq!(warm.u, cold.u);
    }

    #[test]
    fn rejects_wrong_start_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (g, omega, loss) = instance(&mut rng, 3);
        let sub = WeightedSubproblem::new(omega, &g).unwrap();
        assert!(solve_exact_blocks(&sub, &loss, Some(&[0.0; 5]), 1e-8, 10).is_err());
    }
}
