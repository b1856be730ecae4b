use baen_svm::kernels::{gram_symmetric, KernelSpec};
use baen_svm::losses::LossParams;
use baen_svm::oracle::{hinge_primal, pinball_primal, weighted_aen_primal};
use baen_svm::trainer::{fit, solve_weighted_subproblem, DualForm, HyperParams, SignedGram, Variant, WeightedSubproblem};
use baen_svm::data::Dataset;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(rng: &mut ChaCha8Rng) -> (Dataset, Array2<f64>, KernelSpec) {
    let n = rng.random_range(3..=10);
    let x = Array2::from_shape_fn((n, 2), |_| rng.random_range(-2.0..2.0));
    let mut labels: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
    labels[0] = 1;
    labels[1] = -1;
    let spec = if rng.random_bool(0.5) { KernelSpec::linear() } else { KernelSpec::rbf(rng.random_range(0.2..2.0)) };
    let d = Dataset::new(x, labels, "rand").unwrap();
    let k = gram_symmetric(d.samples().view(), &spec);
    (d, k, spec)
}

fn random_loss(rng: &mut ChaCha8Rng) -> LossParams {
    LossParams {
        lambda: 1.0,
        eta: 1.0,
        p: rng.random_range(0.1..=1.0),
        tau: rng.random_range(0.1..=1.0),
        eps: rng.random_range(0.0..0.5),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

#[test]
fn exact_dual_matches_primal_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..20 {
        let (d, k, _) = random_problem(&mut rng);
        let loss = random_loss(&mut rng);
        let omega: Vec<f64> = (0..d.len()).map(|_| rng.random_range(0.05..3.0)).collect();
        let g = SignedGram::new(&k, d.labels()).unwrap();
        let sub = WeightedSubproblem::new(omega.clone(), &g).unwrap();
        let mut hp = HyperParams::default().with_loss(loss);
        hp.qp_tol = 1e-10;
        hp.qp_max_iter = Some(2_000_000);
        let sol = solve_weighted_subproblem(&sub, &hp).unwrap();
        let oracle = weighted_aen_primal(&k, d.labels(), &omega, &loss).unwrap();
        assert!(
            rel(sol.primal_objective, oracle.objective) <= 1e-4,
            "trial {trial}: dual {} oracle {} {loss:?}",
            sol.primal_objective,
            oracle.objective
        );
    }
}

#[test]
fn printed_dual_agrees_only_at_unit_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (d, k, _) = random_problem(&mut rng);
    let omega = vec![1.0; d.len()];
    let g = SignedGram::new(&k, d.labels()).unwrap();
    let sub = WeightedSubproblem::new(omega.clone(), &g).unwrap();
    let unit = LossParams { lambda: 1.0, eta: 1.0, p: 1.0, tau: 1.0, eps: 0.1 };
    let mut hp = HyperParams::default().with_loss(unit);
    hp.qp_tol = 1e-10;
    hp.dual_form = DualForm::Printed;
    let sol = solve_weighted_subproblem(&sub, &hp).unwrap();
    let oracle = weighted_aen_primal(&k, d.labels(), &omega, &unit).unwrap();
    assert!(rel(sol.primal_objective, oracle.objective) <= 1e-4);
}

#[test]
fn convex_baselines_match_primal_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let (d, k, spec) = random_problem(&mut rng);
        let c = rng.random_range(0.1..4.0);
        let tau = rng.random_range(0.1..=1.0);
        let eps = rng.random_range(0.0..0.5);
        let mut hp = HyperParams::default().with_c(c).with_kernel(spec);
        hp.qp_tol = 1e-10;
        hp.qp_max_iter = Some(2_000_000);
        hp.loss.tau = tau;
        hp.loss.eps = eps;

        let m = fit(&d, Variant::Hinge, &hp).unwrap();
        let o = hinge_primal(&k, d.labels(), c).unwrap();
        assert!(rel(m.primal_objective(&d).unwrap(), o.objective) <= 1e-4);

        let m = fit(&d, Variant::EpsPinball, &hp).unwrap();
        let o = pinball_primal(&k, d.labels(), c, tau, eps).unwrap();
        assert!(rel(m.primal_objective(&d).unwrap(), o.objective) <= 1e-4, "eps_pinball");

        let m = fit(&d, Variant::Pinball, &hp).unwrap();
        let o = pinball_primal(&k, d.labels(), c, tau, 0.0).unwrap();
        assert!(rel(m.primal_objective(&d).unwrap(), o.objective) <= 1e-4, "pinball");

        let m = fit(&d, Variant::AenConvex, &hp).unwrap();
        let o = weighted_aen_primal(&k, d.labels(), &vec![c; d.len()], &hp.loss).unwrap();
        assert!(rel(m.primal_objective(&d).unwrap(), o.objective) <= 1e-4, "aen");
    }
}
