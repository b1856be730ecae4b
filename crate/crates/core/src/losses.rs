//! Margin losses used for training and evaluation.
//!
//! All losses take the margin `z = 1 - y f(x)`; positive values are margin
//! violations. The ε-insensitive losses are exactly zero on the band
//! `[-ε/τ, ε]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape parameters of the bounded asymmetric elastic net family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParams {
    /// Bound scale; the bounded loss never exceeds `1 / lambda`.
    pub lambda: f64,
    /// Sharpness of the bounding transform.
    pub eta: f64,
    /// Mix between the quadratic (`p`) and linear (`1 - p`) parts, in `(0, 1]`.
    pub p: f64,
    /// Asymmetry weight of the negative side, in `(0, 1]`.
    pub tau: f64,
    /// Half-width parameter of the insensitive band.
    pub eps: f64,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            eta: 1.0,
            p: 0.5,
            tau: 0.5,
            eps: 0.1,
        }
    }
}

impl LossParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda > 0.0
            && self.eta > 0.0
            && self.p > 0.0
            && self.p <= 1.0
            && self.tau > 0.0
            && self.tau <= 1.0
            && self.eps >= 0.0
            && self.eps.is_finite()
            && self.lambda.is_finite()
            && self.eta.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "loss parameters out of range: {self:?} (need lambda > 0, eta > 0, 0 < p <= 1, 0 < tau <= 1, eps >= 0)"
            )))
        }
    }

    /// Lower and upper ends of the zero band, `(-eps / tau, eps)`.
    pub fn band(&self) -> (f64, f64) {
        (-self.eps / self.tau, self.eps)
    }
}

/// Asymmetric elastic net loss without a band.
pub fn aen_loss(z: f64, p: f64, tau: f64) -> f64 {
    if z >= 0.0 {
        0.5 * p * z * z + (1.0 - p) * z
    } else {
        tau * (0.5 * p * tau * z * z - (1.0 - p) * z)
    }
}

/// Asymmetric elastic net loss with the insensitive band `[-eps/tau, eps]`.
pub fn aen_eps_loss(z: f64, p: f64, tau: f64, eps: f64) -> f64 {
    let lower = -eps / tau;
    if z > eps {
        let s = z - eps;
        0.5 * p * s * s + (1.0 - p) * s
    } else if z < lower {
        let s = z - lower;
        tau * (0.5 * p * s * s - (1.0 - p) * s)
    } else {
        0.0
    }
}

/// Derivative of [`aen_eps_loss`], zero on the closed band.
pub fn aen_eps_grad(z: f64, p: f64, tau: f64, eps: f64) -> f64 {
    let lower = -eps / tau;
    if z > eps {
        p * (z - eps) + (1.0 - p)
    } else if z < lower {
        tau * (p * (z - lower) - (1.0 - p))
    } else {
        0.0
    }
}

/// Bounding transform `h -> (1/λ)(1 - 1/(1 + η h))`.
pub fn bound(h: f64, lambda: f64, eta: f64) -> f64 {
    (1.0 - 1.0 / (1.0 + eta * h)) / lambda
}

/// Bounded asymmetric elastic net loss with insensitive band.
pub fn baen_eps_loss(z: f64, lp: &LossParams) -> f64 {
    bound(aen_eps_loss(z, lp.p, lp.tau, lp.eps), lp.lambda, lp.eta)
}

/// Derivative of [`baen_eps_loss`].
///
/// At the two kinks `z = eps` and `z = -eps/tau` the subdifferential is an
/// interval containing zero; zero is returned there.
pub fn baen_eps_grad(z: f64, lp: &LossParams) -> f64 {
    let h = aen_eps_loss(z, lp.p, lp.tau, lp.eps);
    let dh = aen_eps_grad(z, lp.p, lp.tau, lp.eps);
    let denom = 1.0 + lp.eta * h;
    lp.eta * dh / (lp.lambda * denom * denom)
}

/// ε-insensitive pinball loss.
pub fn pinball_eps_loss(u: f64, tau: f64, eps: f64) -> f64 {
    let lower = -eps / tau;
    if u > eps {
        u - eps
    } else if u < lower {
        -tau * (u - lower)
    } else {
        0.0
    }
}

pub fn hinge_loss(z: f64) -> f64 {
    z.max(0.0)
}
