use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::gram_symmetric;
use crate::losses::aen_eps_loss;
use crate::qp::{clipdcd_solve_from, Hessian, QpProblem, QpSolution};

use super::block::solve_exact_blocks;
use super::dual::{
    assemble_hinge_dual, assemble_pinball_dual, assemble_weighted_dual, DualForm, SignedGram, WeightedSubproblem,
};
use super::model::{Model, TrainDiagnostics};
use super::{HyperParams, Variant};

/// Half-quadratic weights `ω_i = Cη / (1 + η L(z_i))²` for margins `z`.
///
/// `L` is the ε-insensitive asymmetric elastic net loss, so samples inside the
/// band get the full weight `Cη` and weights decay to zero as `|z|` grows.
pub fn hq_update_weights(margins: &[f64], hp: &HyperParams) -> Vec<f64> {
    let lp = &hp.loss;
    margins
        .iter()
        .map(|&z| {
            let l = aen_eps_loss(z, lp.p, lp.tau, lp.eps);
            let s = 1.0 + lp.eta * l;
            let v = -1.0 / (s * s);
            hp.c * lp.eta * (-v)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Weighted ε-AEN primal objective at `w = Σ y_i (α_i - β_i) φ(x_i)`.
    pub primal_objective: f64,
    /// Margins `1 - y_i f(x_i)` on the training samples.
    pub margins: Vec<f64>,
    pub qp: QpSolution,
}

/// Solves one weighted subproblem from the origin.
pub fn solve_weighted_subproblem(sub: &WeightedSubproblem<'_>, hp: &HyperParams) -> Result<SubproblemSolution> {
    solve_weighted_from(sub, hp, None)
}

fn run_qp<H: Hessian>(prob: &QpProblem<H>, hp: &HyperParams, start: Option<&[f64]>) -> Result<QpSolution> {
    clipdcd_solve_from(prob, start, hp.qp_tol, hp.qp_max_iter_for(prob.dim()), None)
}

pub(crate) fn solve_weighted_from(
    sub: &WeightedSubproblem<'_>,
    hp: &HyperParams,
    start: Option<&[f64]>,
) -> Result<SubproblemSolution> {
    let n = sub.gram.len();
    let qp = match hp.dual_form {
        DualForm::Exact => solve_exact_blocks(sub, &hp.loss, start, hp.qp_tol, hp.qp_max_iter_for(4 * n))?,
        DualForm::Printed => run_qp(&assemble_weighted_dual(sub, &hp.loss, hp.dual_form)?, hp, start)?,
    };
    let alpha = qp.u[..n].to_vec();
    let beta = qp.u[n..2 * n].to_vec();
    let diff: Vec<f64> = alpha.iter().zip(&beta).map(|(a, b)| a - b).collect();
    let (reg, margins) = regularizer_and_margins(sub.gram, &diff);
    let lp = &hp.loss;
    let loss: f64 = margins
        .iter()
        .zip(&sub.omega)
        .map(|(&z, w)| w * aen_eps_loss(z, lp.p, lp.tau, lp.eps))
        .sum();
    Ok(SubproblemSolution {
        alpha,
        beta,
        primal_objective: reg + loss,
        margins,
        qp,
    })
}

/// `½ vᵀGv` and the margins `1 - (Gv)_i` for signed coefficients `v`.
pub(crate) fn regularizer_and_margins(gram: &SignedGram, v: &[f64]) -> (f64, Vec<f64>) {
    let gv = gram.mul(v);
    let reg = 0.5 * v.iter().zip(&gv).map(|(a, b)| a * b).sum::<f64>();
    (reg, gv.iter().map(|g| 1.0 - g).collect())
}

fn bounded_objective(reg: f64, margins: &[f64], hp: &HyperParams, variant: Variant) -> f64 {
    reg + hp.c * margins.iter().map(|&z| variant.loss(z, &hp.loss)).sum::<f64>()
}

fn check_inputs(d: &Dataset, gram: &SignedGram, hp: &HyperParams) -> Result<()> {
    hp.validate()?;
    if d.is_empty() {
        return Err(Error::InvalidDataset("cannot train on an empty dataset".into()));
    }
    if gram.len() != d.len() {
        return Err(Error::DimensionMismatch {
            expected: d.len(),
            got: gram.len(),
        });
    }
    Ok(())
}

/// Trains any variant, computing the Gram matrix of `d` first.
pub fn fit(d: &Dataset, variant: Variant, hp: &HyperParams) -> Result<Model> {
    hp.validate()?;
    let k = gram_symmetric(d.samples().view(), &hp.kernel);
    let gram = SignedGram::new(&k, d.labels())?;
    fit_with_gram(d, &gram, variant, hp)
}

/// Trains any variant against a precomputed signed Gram matrix of `d` under
/// `hp.kernel`.
pub fn fit_with_gram(d: &Dataset, gram: &SignedGram, variant: Variant, hp: &HyperParams) -> Result<Model> {
    check_inputs(d, gram, hp)?;
    let mut eff = *hp;
    eff.loss = variant.effective_loss(&hp.loss);
    match variant {
        Variant::EpsBaen | Variant::Baen => hq_solve(d, gram, variant, &eff),
        _ => convex_solve(d, gram, variant, &eff),
    }
}

/// Half-quadratic training of the bounded loss (`eps_baen`; `baen` when `eps = 0`).
pub fn fit_eps_baen(d: &Dataset, hp: &HyperParams) -> Result<Model> {
    let variant = if hp.loss.eps == 0.0 { Variant::Baen } else { Variant::EpsBaen };
    fit(d, variant, hp)
}

/// Single-QP training of a convex variant.
pub fn fit_convex(d: &Dataset, variant: Variant, hp: &HyperParams) -> Result<Model> {
    if variant.is_bounded() {
        return Err(Error::InvalidParameter(format!("{variant} is not a convex variant")));
    }
    fit(d, variant, hp)
}

fn hq_solve(d: &Dataset, gram: &SignedGram, variant: Variant, hp: &HyperParams) -> Result<Model> {
    let n = d.len();
    let tol = hp.hq_tol_for(n);
    let mut omega = vec![hp.c * hp.loss.eta; n];
    let mut state: Option<Vec<f64>> = None;
    let mut prev = vec![0.0; 2 * n];
    let mut trace = Vec::new();
    let mut qp_iterations = 0;
    let mut converged = false;
    let mut last: Option<SubproblemSolution> = None;
    let mut outer = 0;
    while outer < hp.hq_max_iter {
        outer += 1;
        let sub = WeightedSubproblem::new(omega.clone(), gram)?;
        let sol = solve_weighted_from(&sub, hp, state.as_deref())?;
        qp_iterations += sol.qp.iterations;
        let diff: Vec<f64> = sol.alpha.iter().zip(&sol.beta).map(|(a, b)| a - b).collect();
        let (reg, margins) = regularizer_and_margins(gram, &diff);
        trace.push(bounded_objective(reg, &margins, hp, variant));
        let current: Vec<f64> = sol.alpha.iter().chain(&sol.beta).copied().collect();
        let change = current.iter().zip(&prev).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prev = current;
        state = Some(sol.qp.u.clone());
        omega = hq_update_weights(&margins, hp);
        last = Some(sol);
        if change < tol {
            converged = true;
            break;
        }
    }
    let sol = last.expect("at least one outer iteration");
    let diagnostics = TrainDiagnostics {
        hq_iterations: outer,
        converged,
        kkt_residual: sol.qp.kkt_residual,
        qp_iterations,
        objective_trace: trace,
        final_weights: Some(omega),
    };
    Model::from_training(d, gram, variant, *hp, sol.alpha, Some(sol.beta), diagnostics)
}

fn convex_solve(d: &Dataset, gram: &SignedGram, variant: Variant, hp: &HyperParams) -> Result<Model> {
    let n = d.len();
    let lp = hp.loss;
    let (alphas, betas, qp) = match variant {
        Variant::AenConvex | Variant::En => {
            let sub = WeightedSubproblem::new(vec![hp.c; n], gram)?;
            let sol = solve_weighted_from(&sub, hp, None)?;
            (sol.alpha, Some(sol.beta), sol.qp)
        }
        Variant::Hinge => {
            let prob = assemble_hinge_dual(gram, hp.c)?;
            let qp = run_qp(&prob, hp, None)?;
            (qp.u.clone(), None, qp)
        }
        Variant::Pinball | Variant::EpsPinball => {
            let prob = assemble_pinball_dual(gram, hp.c, lp.tau, lp.eps)?;
            let qp = run_qp(&prob, hp, None)?;
            if prob.dim() == n {
                (qp.u.clone(), None, qp)
            } else {
                (qp.u[..n].to_vec(), Some(qp.u[n..].to_vec()), qp)
            }
        }
        Variant::EpsBaen | Variant::Baen => unreachable!("bounded variants use the HQ solver"),
    };
    let diff: Vec<f64> = match &betas {
        Some(b) => alphas.iter().zip(b).map(|(a, b)| a - b).collect(),
        None => alphas.clone(),
    };
    let (reg, margins) = regularizer_and_margins(gram, &diff);
    let diagnostics = TrainDiagnostics {
        hq_iterations: 0,
        converged: qp.converged,
        kkt_residual: qp.kkt_residual,
        qp_iterations: qp.iterations,
        objective_trace: vec![bounded_objective(reg, &margins, hp, variant)],
        final_weights: None,
    };
    Model::from_training(d, gram, variant, *hp, alphas, betas, diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::losses::LossParams;
    use ndarray::array;

    fn hp_with(c: f64, eta: f64, p: f64, tau: f64, eps: f64) -> HyperParams {
        HyperParams::default().with_c(c).with_loss(LossParams {
            lambda: 1.0,
            eta,
            p,
            tau,
            eps,
        })
    }

    #[test]
    fn weights_full_inside_band() {
        let hp = hp_with(3.0, 2.0, 0.5, 0.5, 0.2);
        assert_eq!(hq_update_weights(&[0.0, 0.2, -0.4], &hp), vec![6.0; 3]);
    }

    #[test]
    fn weight_hand_example() {
        let hp = hp_with(1.0, 1.0, 0.5, 1.0, 0.5);
        let w = hq_update_weights(&[2.0], &hp)[0];
        assert!((w - 1.0 / 2.3125f64.powi(2)).abs() < 1e-12);
        assert!((w - 0.186992).abs() < 1e-5);
    }

    #[test]
    fn weights_vanish_for_far_margins() {
        let hp = hp_with(1.0, 1.0, 0.5, 0.5, 0.1);
        let w = hq_update_weights(&[1e6, -1e6], &hp);
        assert!(w.iter().all(|&v| v > 0.0 && v < 1e-9));
    }

    #[test]
    fn separable_toy_is_fitted() {
        let x = array![[2.0, 2.0], [2.5, 1.5], [-2.0, -2.0], [-1.5, -2.5]];
        let d = Dataset::new(x, vec![1, 1, -1, -1], "toy").unwrap();
        for v in Variant::ALL {
            let m = fit(&d, v, &hp_with(100.0, 1.0, 0.5, 0.5, 0.1)).unwrap();
            assert_eq!(m.predict(d.samples()).unwrap(), d.labels(), "{v}");
        }
    }

    #[test]
    fn tiny_weights_give_tiny_coefficients() {
        let x = array![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
        let d = Dataset::new(x, vec![1, 1, -1], "t").unwrap();
        let k = gram_symmetric(d.samples().view(), &KernelSpec::linear());
        let g = SignedGram::new(&k, d.labels()).unwrap();
        let sub = WeightedSubproblem::new(vec![1e-9; 3], &g).unwrap();
        let sol = solve_weighted_subproblem(&sub, &HyperParams::default()).unwrap();
        assert!(sol.alpha.iter().chain(&sol.beta).all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn hq_trace_does_not_increase() {
        let x = array![[1.0, 0.3], [0.8, 1.1], [-0.9, -1.2], [-1.1, 0.1], [1.2, 0.9], [0.9, 1.0]];
        let d = Dataset::new(x, vec![1, 1, -1, -1, -1, 1], "hq").unwrap();
        let mut hp = hp_with(2.0, 1.0, 0.7, 0.6, 0.1);
        hp.qp_tol = 1e-10;
        let m = fit_eps_baen(&d, &hp).unwrap();
        let t = &m.diagnostics().objective_trace;
        assert!(t.windows(2).all(|w| w[1] <= w[0] + 1e-10), "{t:?}");
        assert!(m.diagnostics().converged);
    }

    #[test]
    fn convex_rejects_bounded_variant() {
        let x = array![[1.0], [-1.0]];
        let d = Dataset::new(x, vec![1, -1], "c").unwrap();
        assert!(fit_convex(&d, Variant::Baen, &HyperParams::default()).is_err());
    }
}
