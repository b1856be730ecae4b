//! Kernel functions and Gram matrices.
//!
//! Every kernel carries a constant `bias_offset` added to each entry. With the
//! default offset of 1 this is the kernel of the input augmented by a constant
//! unit feature, so the intercept is learned as part of the weight vector.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelKind::Linear => "linear",
            KernelKind::Rbf => "rbf",
        })
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(KernelKind::Linear),
            "rbf" | "gaussian" => Ok(KernelKind::Rbf),
            other => Err(Error::InvalidParameter(format!("unknown kernel {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Width of the RBF kernel `exp(-sigma |x - x'|^2)`; unused for linear.
    pub sigma: f64,
    pub bias_offset: f64,
}

impl KernelSpec {
    pub fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            sigma: 1.0,
            bias_offset: 1.0,
        }
    }

    pub fn rbf(sigma: f64) -> Self {
        Self {
            kind: KernelKind::Rbf,
            sigma,
            bias_offset: 1.0,
        }
    }

    pub fn with_offset(mut self, bias_offset: f64) -> Self {
        self.bias_offset = bias_offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == KernelKind::Rbf && !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("rbf sigma must be positive, got {}", self.sigma)));
        }
        if !self.bias_offset.is_finite() {
            return Err(Error::InvalidParameter("bias offset must be finite".into()));
        }
        Ok(())
    }

    /// Kernel value on two equal-length slices; dimensions are not checked.
    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() + self.bias_offset,
            KernelKind::Rbf => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-self.sigma * d2).exp() + self.bias_offset
            }
        }
    }
}

pub fn kernel_value(x: &[f64], y: &[f64], spec: &KernelSpec) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(spec.eval(x, y))
}

fn rows(m: &ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Kernel matrix between the rows of `a` and the rows of `b`.
pub fn gram(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, spec: &KernelSpec) -> Result<Array2<f64>> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: b.ncols(),
        });
    }
    let (ra, rb) = (rows(&a), rows(&b));
    let m = rb.len();
    let data: Vec<f64> = ra
        .par_iter()
        .flat_map_iter(|x| rb.iter().map(move |y| spec.eval(x, y)))
        .collect();
    Ok(Array2::from_shape_vec((ra.len(), m), data).expect("shape matches"))
}

/// Symmetric Gram matrix of the rows of `x`.
///
/// Each unordered pair is evaluated once and mirrored, so the result is
/// exactly symmetric.
pub fn gram_symmetric(x: ArrayView2<'_, f64>, spec: &KernelSpec) -> Array2<f64> {
    let r = rows(&x);
    let n = r.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| spec.eval(&r[i], &r[j])).collect())
        .collect();
    let mut g = Array2::zeros((n, n));
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            g[[i, i + off]] = v;
            g[[i + off, i]] = v;
        }
    }
    g
}
