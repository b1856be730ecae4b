use baen_svm::data::{stratified_kfold, Dataset, FoldPlan};
use baen_svm::evaluation::{accuracy, cross_validate, cross_validate_with_models, f1, grid_search, Confusion, GridSpec};
use baen_svm::experiments::{gen_gaussian_2class, inject_outliers, OutlierTarget, SynthSpec};
use baen_svm::kernels::{gram_symmetric, KernelKind, KernelSpec};
use baen_svm::losses::LossParams;
use baen_svm::qp::{DenseHessian, Hessian};
use baen_svm::trainer::{
    assemble_weighted_dual, fit, model_from_str, model_to_string, DualForm, HyperParams, SignedGram, Variant,
    WeightedSubproblem,
};
use nalgebra::DMatrix;
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense(h: &impl Hessian) -> DMatrix<f64> {
    let d = DenseHessian::materialize(h);
    DMatrix::from_fn(h.dim(), h.dim(), |i, j| d.row(i)[j])
}

#[test]
fn weighted_dual_hessians_are_psd() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let n = rng.random_range(2..9);
        let x = Array2::from_shape_fn((n, 2), |_| rng.random_range(-2.0..2.0));
        let labels: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let spec = if rng.random_bool(0.5) { KernelSpec::linear() } else { KernelSpec::rbf(rng.random_range(0.3..2.0)) };
        let g = SignedGram::new(&gram_symmetric(x.view(), &spec), &labels).unwrap();
        let omega: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..5.0)).collect();
        let loss = LossParams {
            lambda: 1.0,
            eta: 1.0,
            p: rng.random_range(0.1..=1.0),
            tau: rng.random_range(0.1..=1.0),
            eps: rng.random_range(0.0..0.5),
        };
        let sub = WeightedSubproblem::new(omega, &g).unwrap();
        for form in [DualForm::Exact, DualForm::Printed] {
            let h = dense(&assemble_weighted_dual(&sub, &loss, form).unwrap().h);
            let scale = h.amax().max(1.0);
            let min = h.symmetric_eigen().eigenvalues.min();
            assert!(min >= -1e-10 * scale, "{form:?}: min eigenvalue {min}");
        }
    }
}

#[test]
fn outliers_receive_small_weights() {
    let spec = SynthSpec::default();
    let clean = gen_gaussian_2class(&spec).unwrap();
    let d = inject_outliers(&clean, &spec, OutlierTarget::Negative, 3, 1).unwrap();
    let m = fit(&d, Variant::EpsBaen, &HyperParams::default()).unwrap();
    let w = m.diagnostics().final_weights.clone().unwrap();
    let mut sorted = w.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    for &wi in &w[clean.len()..] {
        assert!(wi < median, "outlier weight {wi} vs median {median}");
    }
}

#[test]
fn test_folds_do_not_leak_into_training() {
    let d = gen_gaussian_2class(&SynthSpec { n: 60, seed: 4, ..SynthSpec::default() }).unwrap();
    let plan = stratified_kfold(&d, 3, 9).unwrap();
    let hp = HyperParams::default();
    let (_, before) = cross_validate_with_models(&d, Variant::EpsBaen, &hp, &plan).unwrap();
    for fold in 0..plan.k {
        let mut x = d.samples().clone();
        let mut labels = d.labels().to_vec();
        for i in plan.test_indices(fold) {
            x.row_mut(i).fill(1e3);
            labels[i] = -labels[i];
        }
        let mutated = Dataset::new(x, labels, "mutated").unwrap();
        let (_, after) = cross_validate_with_models(&mutated, Variant::EpsBaen, &hp, &plan).unwrap();
        assert_eq!(before[fold], after[fold], "fold {fold}");
    }
}

#[test]
fn constant_predictor_metrics() {
    let truth: Vec<i8> = (0..20).map(|i| if i < 10 { 1 } else { -1 }).collect();
    let c = Confusion::from_labels(&truth, &[1; 20]).unwrap();
    assert_eq!(accuracy(&c).unwrap(), 0.5);
    assert!((f1(&c) - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn leave_one_out_on_separable_toy() {
    let x = array![[2.0, 2.0], [3.0, 1.0], [2.5, 3.0], [-2.0, -2.0], [-3.0, -1.0], [-2.5, -3.0]];
    let d = Dataset::new(x, vec![1, 1, 1, -1, -1, -1], "toy").unwrap();
    assert!(stratified_kfold(&d, d.len(), 0).is_err());
    let plan = FoldPlan { k: 6, assignments: (0..6).collect(), seed: 0 };
    let cv = cross_validate(&d, Variant::Hinge, &HyperParams::default().with_c(100.0), &plan).unwrap();
    assert_eq!(cv.folds.len(), 6);
    assert_eq!(cv.mean_acc, 1.0);
}

#[test]
fn grid_prefers_the_fitting_c() {
    let d = gen_gaussian_2class(&SynthSpec { n: 40, seed: 8, ..SynthSpec::default() }).unwrap();
    let plan = stratified_kfold(&d, 4, 1).unwrap();
    let mut grid = GridSpec::single(Variant::Hinge, &HyperParams::default());
    grid.c = vec![1e-6, 1.0];
    let r = grid_search(&d, &grid, &plan, &HyperParams::default()).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert_eq!(r.best_row().point.c, 1.0);
    assert!(r.rows[0].cv.mean_acc < r.rows[1].cv.mean_acc);

    let single = GridSpec::single(Variant::EpsBaen, &HyperParams::default());
    let r = grid_search(&d, &single, &plan, &HyperParams::default()).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert_eq!(r.best_hyper().c, HyperParams::default().c);
}

#[test]
fn grid_rows_match_point_count() {
    let d = gen_gaussian_2class(&SynthSpec { n: 30, seed: 2, ..SynthSpec::default() }).unwrap();
    let plan = stratified_kfold(&d, 3, 1).unwrap();
    let mut grid = GridSpec::standard(Variant::EpsBaen, KernelKind::Linear);
    grid.c = vec![0.5, 2.0];
    grid.eta = vec![1.0, 2.0];
    grid.p = vec![0.5];
    grid.tau = vec![0.5, 1.0];
    grid.eps = vec![0.1];
    let r = grid_search(&d, &grid, &plan, &HyperParams::default()).unwrap();
    assert_eq!(r.rows.len(), grid.points().len());
    assert_eq!(r.rows.len(), 8);
}

#[test]
fn persisted_model_predicts_identically() {
    let d = gen_gaussian_2class(&SynthSpec { n: 50, seed: 3, ..SynthSpec::default() }).unwrap();
    for (variant, kernel) in [(Variant::EpsBaen, KernelSpec::rbf(1.5)), (Variant::Pinball, KernelSpec::linear())] {
        let m = fit(&d, variant, &HyperParams::default().with_kernel(kernel)).unwrap();
        let back = model_from_str(&model_to_string(&m).unwrap()).unwrap();
        let (a, b) = (m.decision_values(d.samples()).unwrap(), back.decision_values(d.samples()).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn symmetric_pair_gives_bisector() {
    let d = Dataset::new(array![[1.0, 1.0], [-1.0, -1.0]], vec![1, -1], "pair").unwrap();
    let hp = HyperParams::default().with_kernel(KernelSpec::linear().with_offset(0.0));
    let m = fit(&d, Variant::En, &hp).unwrap();
    let (w, b) = m.linear_weights().unwrap();
    assert!(b.abs() < 1e-12);
    assert!((w[0] - w[1]).abs() < 1e-10 && w[0] > 0.0);
    let probe = array![[1.0, -1.0], [-3.0, 3.0]];
    for f in m.decision_values(&probe).unwrap() {
        assert!(f.abs() < 1e-10);
    }
}
