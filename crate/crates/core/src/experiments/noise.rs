use ndarray::Array2;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::synth::{draw_gaussian, SynthSpec};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Which class receives label-noise outliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierTarget {
    Positive,
    Negative,
    /// `count` outliers for each class.
    Both,
}

impl OutlierTarget {
    fn labels(&self) -> &'static [i8] {
        match self {
            OutlierTarget::Positive => &[1],
            OutlierTarget::Negative => &[-1],
            OutlierTarget::Both => &[-1, 1],
        }
    }
}

/// Appends `count` points drawn from the opposite class's Gaussian in `spec`,
/// labelled as the target class.
pub fn inject_outliers(d: &Dataset, spec: &SynthSpec, target: OutlierTarget, count: usize, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    if d.n_features() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: d.n_features() });
    }
    let (pos, neg) = d.class_counts();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = d.clone();
    for &label in target.labels() {
        let size = if label > 0 { pos } else { neg };
        if count > size {
            return Err(Error::InvalidParameter(format!(
                "{count} outliers exceed class {label} size {size}"
            )));
        }
        if count == 0 {
            continue;
        }
        let x: Array2<f64> = draw_gaussian(&mut rng, count, spec.mean(-label), spec.cov_diag);
        out = out.append(&x, &vec![label; count])?;
    }
    Ok(out)
}

/// Negates exactly `round(fraction * n)` uniformly chosen labels.
pub fn flip_labels(d: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!("flip fraction {fraction} outside [0, 1]")));
    }
    let n = d.len();
    let count = (fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = d.labels().to_vec();
    for i in sample(&mut rng, n, count.min(n)) {
        labels[i] = -labels[i];
    }
    d.with_labels(labels)
}

/// Adds `N(0, r · var_j)` noise to feature `j`, `var_j` its sample variance.
pub fn add_feature_noise(d: &Dataset, r: f64, seed: u64) -> Result<Dataset> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise ratio {r} must be nonnegative")));
    }
    let n = d.len();
    let mut x = d.samples().clone();
    if r == 0.0 || n < 2 {
        return d.with_samples(x);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for mut col in x.columns_mut() {
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        if var == 0.0 {
            continue;
        }
        let dist = Normal::new(0.0, (r * var).sqrt()).expect("valid normal");
        for v in col.iter_mut() {
            *v += dist.sample(&mut rng);
        }
    }
    d.with_samples(x)
}
