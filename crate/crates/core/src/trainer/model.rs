use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ScalerParams};
use crate::error::{Error, Result};
use crate::kernels::{KernelKind, KernelSpec};

use super::dual::SignedGram;
use super::fit::regularizer_and_margins;
use super::{HyperParams, Variant};

/// Solver statistics collected during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainDiagnostics {
    /// Outer HQ iterations; 0 for convex variants.
    pub hq_iterations: usize,
    pub converged: bool,
    /// Projected-gradient residual of the last QP solve.
    pub kkt_residual: f64,
    /// Coordinate updates summed over all QP solves.
    pub qp_iterations: usize,
    /// Primal objective after each outer iteration.
    pub objective_trace: Vec<f64>,
    /// HQ weights after the last update.
    pub final_weights: Option<Vec<f64>>,
}

/// A trained classifier with decision function `f(x) = Σ_i y_i K(x, x_i) c_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub(super) variant: Variant,
    pub(super) hyper: HyperParams,
    pub(super) samples: Array2<f64>,
    pub(super) labels: Vec<i8>,
    pub(super) alphas: Vec<f64>,
    pub(super) betas: Option<Vec<f64>>,
    pub(super) scaler: Option<ScalerParams>,
    pub(super) train_decision: Vec<f64>,
    pub(super) diagnostics: TrainDiagnostics,
}

impl Model {
    pub(super) fn from_training(
        d: &Dataset,
        gram: &SignedGram,
        variant: Variant,
        hyper: HyperParams,
        alphas: Vec<f64>,
        betas: Option<Vec<f64>>,
        diagnostics: TrainDiagnostics,
    ) -> Result<Self> {
        let coefs = signed_difference(&alphas, betas.as_deref());
        let (_, margins) = regularizer_and_margins(gram, &coefs);
        let train_decision = margins.iter().zip(d.labels()).map(|(z, &y)| f64::from(y) * (1.0 - z)).collect();
        Ok(Self {
            variant,
            hyper,
            samples: d.samples().clone(),
            labels: d.labels().to_vec(),
            alphas,
            betas,
            scaler: None,
            train_decision,
            diagnostics,
        })
    }

    /// Attaches a scaler applied to inputs before kernel evaluation.
    pub fn with_scaler(mut self, scaler: ScalerParams) -> Result<Self> {
        if scaler.means.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: scaler.means.len(),
            });
        }
        self.scaler = Some(scaler);
        Ok(self)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.hyper.kernel
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> Option<&[f64]> {
        self.betas.as_deref()
    }

    pub fn scaler(&self) -> Option<&ScalerParams> {
        self.scaler.as_ref()
    }

    pub fn diagnostics(&self) -> &TrainDiagnostics {
        &self.diagnostics
    }

    /// Retained training inputs, in the scaled space the model was fitted in.
    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    /// Decision values on the training inputs, recorded at fit time.
    pub fn train_decision(&self) -> &[f64] {
        &self.train_decision
    }

    pub fn n_features(&self) -> usize {
        self.samples.ncols()
    }

    /// `α_i - β_i`, or `λ_i` for one-block variants.
    pub fn coefs(&self) -> Vec<f64> {
        signed_difference(&self.alphas, self.betas.as_deref())
    }

    /// Explicit `(w, b)` with `f(x) = w·x + b` for the linear kernel, in the
    /// space the model was trained in. `None` for other kernels.
    pub fn linear_weights(&self) -> Option<(Vec<f64>, f64)> {
        if self.hyper.kernel.kind != KernelKind::Linear {
            return None;
        }
        let mut w = vec![0.0; self.n_features()];
        let mut b = 0.0;
        for (i, c) in self.coefs().into_iter().enumerate() {
            let yc = f64::from(self.labels[i]) * c;
            for (wj, xj) in w.iter_mut().zip(self.samples.row(i)) {
                *wj += yc * xj;
            }
            b += yc * self.hyper.kernel.bias_offset;
        }
        Some((w, b))
    }

    /// Decision values for raw inputs; the attached scaler is applied first.
    pub fn decision_values(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.ncols(),
            });
        }
        let scaled;
        let x = match &self.scaler {
            Some(s) => {
                scaled = s.transform(x)?;
                &scaled
            }
            None => x,
        };
        let weights: Vec<(usize, f64)> = self
            .coefs()
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c != 0.0)
            .map(|(i, c)| (i, f64::from(self.labels[i]) * c))
            .collect();
        let kernel = self.hyper.kernel;
        Ok(x
            .rows()
            .into_iter()
            .map(|row| {
                let row = row.to_vec();
                weights
                    .iter()
                    .map(|&(i, w)| {
                        let sv = self.samples.row(i);
                        w * kernel.eval(&row, sv.as_slice().expect("standard layout"))
                    })
                    .sum()
            })
            .collect())
    }

    /// Labels `sign(f(x))` with `sign(0) = +1`.
    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<i8>> {
        Ok(self
            .decision_values(x)?
            .into_iter()
            .map(|f| if f >= 0.0 { 1 } else { -1 })
            .collect())
    }

    /// Default threshold for [`Model::support_vectors`]: `1e-6` times the
    /// largest per-sample weight (`Cη` for bounded variants, `C` otherwise).
    pub fn default_sv_tol(&self) -> f64 {
        let scale = if self.variant.is_bounded() {
            self.hyper.c * self.hyper.loss.eta
        } else {
            self.hyper.c
        };
        1e-6 * scale
    }

    /// Indices with `max(α_i, β_i) > tol`.
    pub fn support_vectors(&self, tol: f64) -> Vec<usize> {
        (0..self.alphas.len())
            .filter(|&i| {
                let b = self.betas.as_ref().map_or(0.0, |b| b[i].abs());
                self.alphas[i].abs().max(b) > tol
            })
            .collect()
    }

    pub fn sparsity_ratio(&self, tol: f64) -> f64 {
        if self.alphas.is_empty() {
            return 0.0;
        }
        self.support_vectors(tol).len() as f64 / self.alphas.len() as f64
    }

    /// `½ cᵀGc + C Σ L(z_i)` with the variant's loss, margins taken on `d`.
    ///
    /// `d` is expected in the same space as the training data (the scaler is
    /// applied as in [`Model::decision_values`]).
    pub fn primal_objective(&self, d: &Dataset) -> Result<f64> {
        let f = self.decision_values(d.samples())?;
        let coefs = self.coefs();
        let active: Vec<usize> = (0..coefs.len()).filter(|&i| coefs[i] != 0.0).collect();
        let kernel = self.hyper.kernel;
        let mut reg = 0.0;
        for &i in &active {
            let xi = self.samples.row(i);
            let wi = f64::from(self.labels[i]) * coefs[i];
            for &j in &active {
                let xj = self.samples.row(j);
                let wj = f64::from(self.labels[j]) * coefs[j];
                reg += wi * wj * kernel.eval(xi.as_slice().unwrap(), xj.as_slice().unwrap());
            }
        }
        let loss: f64 = f
            .iter()
            .zip(d.labels())
            .map(|(fi, &y)| self.variant.loss(1.0 - f64::from(y) * fi, &self.hyper.loss))
            .sum();
        Ok(0.5 * reg + self.hyper.c * loss)
    }
}

fn signed_difference(alphas: &[f64], betas: Option<&[f64]>) -> Vec<f64> {
    match betas {
        Some(b) => alphas.iter().zip(b).map(|(a, b)| a - b).collect(),
        None => alphas.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::fit;
    use ndarray::array;

    fn toy() -> Dataset {
        let x = array![[2.0, 2.0], [3.0, 1.5], [-2.0, -2.0], [-1.5, -3.0]];
        Dataset::new(x, vec![1, 1, -1, -1], "toy").unwrap()
    }

    fn zero_model(d: &Dataset, variant: Variant, hp: HyperParams) -> Model {
        let n = d.len();
        Model {
            variant,
            hyper: hp,
            samples: d.samples().clone(),
            labels: d.labels().to_vec(),
            alphas: vec![0.0; n],
            betas: Some(vec![0.0; n]),
            scaler: None,
            train_decision: vec![0.0; n],
            diagnostics: TrainDiagnostics {
                hq_iterations: 0,
                converged: true,
                kkt_residual: 0.0,
                qp_iterations: 0,
                objective_trace: vec![],
                final_weights: None,
            },
        }
    }

    #[test]
    fn zero_model_predicts_positive() {
        let d = toy();
        let m = zero_model(&d, Variant::EpsBaen, HyperParams::default());
        assert!(m.decision_values(d.samples()).unwrap().iter().all(|&f| f == 0.0));
        assert_eq!(m.predict(d.samples()).unwrap(), vec![1; 4]);
        assert!(m.support_vectors(1e-12).is_empty());
        assert_eq!(m.sparsity_ratio(1e-12), 0.0);
    }

    #[test]
    fn zero_model_objective_closed_form() {
        let d = toy();
        let mut hp = HyperParams::default().with_c(2.0);
        let m = zero_model(&d, Variant::EpsBaen, hp);
        let expected = 2.0 * 4.0 * Variant::EpsBaen.loss(1.0, &hp.loss);
        assert!((m.primal_objective(&d).unwrap() - expected).abs() < 1e-12);
        hp.loss.eps = 1.0;
        hp.loss.tau = 1.0;
        let m = zero_model(&d, Variant::EpsBaen, hp);
        assert_eq!(m.primal_objective(&d).unwrap(), 0.0);
    }

    #[test]
    fn decision_matches_training_and_primal_weights() {
        let d = toy();
        let hp = HyperParams::default().with_c(4.0);
        let m = fit(&d, Variant::EpsBaen, &hp).unwrap();
        let f = m.decision_values(d.samples()).unwrap();
        for (a, b) in f.iter().zip(m.train_decision()) {
            assert!((a - b).abs() < 1e-8);
        }
        let (w, bias) = m.linear_weights().unwrap();
        for (i, fi) in f.iter().enumerate() {
            let direct = w[0] * d.samples()[[i, 0]] + w[1] * d.samples()[[i, 1]] + bias;
            assert!((fi - direct).abs() < 1e-10);
        }
        assert_eq!(m.predict(d.samples()).unwrap(), d.labels());
        let zero = zero_model(&d, Variant::EpsBaen, hp);
        assert!(m.primal_objective(&d).unwrap() <= zero.primal_objective(&d).unwrap());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let d = toy();
        let m = zero_model(&d, Variant::Hinge, HyperParams::default());
        let x = Array2::zeros((2, 3));
        assert!(matches!(m.decision_values(&x), Err(Error::DimensionMismatch { .. })));
    }
}
