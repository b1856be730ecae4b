//! Self-checks of the solvers against independent reference implementations.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::Result;
use crate::kernels::{gram_symmetric, KernelSpec};
use crate::losses::LossParams;
use crate::oracle::{hinge_primal, pinball_primal, weighted_aen_primal};
use crate::qp::{clipdcd_solve_from, default_max_iter, qp_oracle, DenseHessian, QpProblem};
use crate::trainer::{fit, solve_weighted_subproblem, HyperParams, SignedGram, Variant, WeightedSubproblem};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Random box QP with a diagonally shifted Gram Hessian (positive definite).
pub fn random_box_qp(rng: &mut ChaCha8Rng, d: usize) -> QpProblem<DenseHessian> {
    let m = Array2::from_shape_fn((d, d + 2), |_| rng.random_range(-1.0..1.0));
    let g = m.dot(&m.t());
    let shift = rng.random_range(0.05..1.0);
    let h = DenseHessian::from_fn(d, |i, j| g[[i, j]] + if i == j { shift } else { 0.0 });
    let q: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let lo: Vec<f64> = (0..d).map(|_| if rng.random_bool(0.5) { 0.0 } else { -rng.random_range(0.1..2.0) }).collect();
    let hi: Vec<f64> = (0..d)
        .map(|_| if rng.random_bool(0.3) { f64::INFINITY } else { rng.random_range(0.1..2.0) })
        .collect();
    QpProblem::new(h, q, lo, hi).expect("valid random problem")
}

/// ClipDCD against projected gradient on random box QPs.
pub fn check_qp(seed: u64, trials: usize) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_gap: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..trials {
        let d = rng.random_range(1..=25);
        let prob = random_box_qp(&mut rng, d);
        let mut trace = Vec::new();
        let sol = clipdcd_solve_from(&prob, None, 1e-10, default_max_iter(d) * 100, Some(&mut trace))?;
        let reference = qp_oracle(&prob, 1e-10)?;
        let gap = (sol.objective - reference.objective) / (1.0 + reference.objective.abs());
        worst_gap = worst_gap.max(gap.abs());
        let feasible = sol.u.iter().enumerate().all(|(i, &v)| v >= prob.lo[i] && v <= prob.hi[i]);
        let monotone = trace.windows(2).all(|w| w[1] <= w[0]);
        if gap.abs() > 1e-7 || !feasible || !monotone {
            failures += 1;
        }
    }
    Ok(Check {
        name: "clipdcd matches projected-gradient reference".into(),
        passed: failures == 0,
        detail: format!("{trials} problems, {failures} failures, worst relative gap {worst_gap:.3e}"),
    })
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize) -> (Dataset, KernelSpec) {
    let x = Array2::from_shape_fn((n, 2), |_| rng.random_range(-2.0..2.0));
    let labels: Vec<i8> = (0..n)
        .map(|i| match i {
            0 => 1,
            1 => -1,
            _ if rng.random_bool(0.5) => 1,
            _ => -1,
        })
        .collect();
    let spec = if rng.random_bool(0.5) {
        KernelSpec::linear()
    } else {
        KernelSpec::rbf(rng.random_range(0.2..2.0))
    };
    (Dataset::new(x, labels, "random").expect("finite samples"), spec)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

/// Dual-solved weighted subproblems against the primal barrier solver.
pub fn check_weighted_dual(seed: u64, trials: usize) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.random_range(3..=10);
        let (d, spec) = random_dataset(&mut rng, n);
        let loss = LossParams {
            lambda: 1.0,
            eta: 1.0,
            p: rng.random_range(0.1..=1.0),
            tau: rng.random_range(0.1..=1.0),
            eps: rng.random_range(0.0..0.5),
        };
        let omega: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..3.0)).collect();
        let k = gram_symmetric(d.samples().view(), &spec);
        let g = SignedGram::new(&k, d.labels())?;
        let sub = WeightedSubproblem::new(omega.clone(), &g)?;
        let mut hp = HyperParams::default().with_loss(loss);
        hp.qp_tol = 1e-10;
        hp.qp_max_iter = Some(2_000_000);
        let dual = solve_weighted_subproblem(&sub, &hp)?;
        let primal = weighted_aen_primal(&k, d.labels(), &omega, &loss)?;
        worst = worst.max(relative(dual.primal_objective, primal.objective));
    }
    Ok(Check {
        name: "weighted subproblem dual matches primal reference".into(),
        passed: worst <= 1e-4,
        detail: format!("{trials} problems, worst relative gap {worst:.3e}"),
    })
}

/// Hinge and pinball duals against the primal barrier solver.
pub fn check_convex_duals(seed: u64, trials: usize) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.random_range(3..=10);
        let (d, spec) = random_dataset(&mut rng, n);
        let mut hp = HyperParams::default().with_c(rng.random_range(0.1..4.0)).with_kernel(spec);
        hp.loss.tau = rng.random_range(0.1..=1.0);
        hp.loss.eps = rng.random_range(0.0..0.5);
        hp.qp_tol = 1e-10;
        hp.qp_max_iter = Some(2_000_000);
        let k = gram_symmetric(d.samples().view(), &spec);
        let hinge = fit(&d, Variant::Hinge, &hp)?.primal_objective(&d)?;
        worst = worst.max(relative(hinge, hinge_primal(&k, d.labels(), hp.c)?.objective));
        let pin = fit(&d, Variant::EpsPinball, &hp)?.primal_objective(&d)?;
        let reference = pinball_primal(&k, d.labels(), hp.c, hp.loss.tau, hp.loss.eps)?;
        worst = worst.max(relative(pin, reference.objective));
    }
    Ok(Check {
        name: "hinge and pinball duals match primal reference".into(),
        passed: worst <= 1e-4,
        detail: format!("{trials} problems, worst relative gap {worst:.3e}"),
    })
}

/// All checks with their default sizes.
pub fn run_all(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        check_qp(seed, 100)?,
        check_weighted_dual(seed, 20)?,
        check_convex_duals(seed, 20)?,
    ])
}
