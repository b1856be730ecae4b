use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Two axis-aligned Gaussian classes in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    /// Total sample count, split evenly between the classes.
    pub n: usize,
    pub mu_pos: [f64; 2],
    pub mu_neg: [f64; 2],
    /// Per-coordinate variances.
    pub cov_diag: [f64; 2],
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n: 150,
            mu_pos: [3.0, 3.0],
            mu_neg: [-3.0, -3.0],
            cov_diag: [1.0, 1.0],
            seed: 42,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n % 2 != 0 {
            return Err(Error::InvalidParameter(format!("synthetic n must be even and positive, got {}", self.n)));
        }
        if self.cov_diag.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter("covariance entries must be positive".into()));
        }
        if self.mu_pos.iter().chain(&self.mu_neg).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("class means must be finite".into()));
        }
        Ok(())
    }

    /// Mean of the class carrying `label`.
    pub fn mean(&self, label: i8) -> [f64; 2] {
        if label > 0 {
            self.mu_pos
        } else {
            self.mu_neg
        }
    }
}

/// Draws `count` points from `N(mean, diag(var))`.
pub(crate) fn draw_gaussian(rng: &mut ChaCha8Rng, count: usize, mean: [f64; 2], var: [f64; 2]) -> Array2<f64> {
    let dists = [
        Normal::new(mean[0], var[0].sqrt()).expect("valid normal"),
        Normal::new(mean[1], var[1].sqrt()).expect("valid normal"),
    ];
    let mut x = Array2::zeros((count, 2));
    for i in 0..count {
        for j in 0..2 {
            x[[i, j]] = dists[j].sample(rng);
        }
    }
    x
}

/// `n/2` positive samples followed by `n/2` negative samples.
pub fn gen_gaussian_2class(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let half = spec.n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pos = draw_gaussian(&mut rng, half, spec.mu_pos, spec.cov_diag);
    let neg = draw_gaussian(&mut rng, half, spec.mu_neg, spec.cov_diag);
    let x = ndarray::concatenate(ndarray::Axis(0), &[pos.view(), neg.view()]).expect("equal widths");
    let labels = (0..spec.n).map(|i| if i < half { 1 } else { -1 }).collect();
    Dataset::new(x, labels, "gaussian2")?.with_feature_names(vec!["x1".into(), "x2".into()])
}

/// Reference line `x1 - x2`.
pub fn bayes_margin(x: &[f64]) -> f64 {
    x[0] - x[1]
}

/// `x1 + x2`, the Bayes boundary for means `±(m, m)` with equal isotropic covariance.
pub fn true_bayes_margin(x: &[f64]) -> f64 {
    x[0] + x[1]
}

/// Angle in `[0, π/2]` between the boundary `w·x + b = 0` and the line
/// `x1 + x2 = 0`, from the normals `w` and `(1, 1)`.
pub fn boundary_angle(w: &[f64]) -> f64 {
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || w.len() != 2 {
        return std::f64::consts::FRAC_PI_2;
    }
    let cos = (w[0] + w[1]).abs() / (std::f64::consts::SQRT_2 * norm);
    cos.min(1.0).acos()
}
