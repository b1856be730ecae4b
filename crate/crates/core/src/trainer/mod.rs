//! Model training: the half-quadratic solver for the bounded loss, convex
//! baselines, and the fitted [`Model`].

mod block;
mod dual;
mod fit;
mod model;
mod persist;

pub use block::solve_exact_blocks;
pub use dual::{
    assemble_hinge_dual, assemble_pinball_dual, assemble_weighted_dual, exact_dual_offset, Block,
    BlockHessian, DualForm, SignedGram, WeightedSubproblem,
};
pub use fit::{
    fit, fit_convex, fit_eps_baen, fit_with_gram, hq_update_weights, solve_weighted_subproblem, SubproblemSolution,
};
pub use model::{Model, TrainDiagnostics};
pub use persist::{load_model, model_from_str, model_to_string, save_model, MODEL_SCHEME};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::losses::LossParams;

/// Training objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Bounded asymmetric elastic net loss with insensitive band, solved by HQ.
    EpsBaen,
    /// [`Variant::EpsBaen`] with `eps = 0`.
    Baen,
    /// Convex ε-insensitive asymmetric elastic net loss with unit weights.
    AenConvex,
    /// [`Variant::AenConvex`] with `tau = 1`.
    En,
    /// Pinball loss (`eps = 0`).
    Pinball,
    EpsPinball,
    Hinge,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::EpsBaen,
        Variant::Baen,
        Variant::AenConvex,
        Variant::En,
        Variant::Pinball,
        Variant::EpsPinball,
        Variant::Hinge,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::EpsBaen => "eps_baen",
            Variant::Baen => "baen",
            Variant::AenConvex => "aen_convex",
            Variant::En => "en",
            Variant::Pinball => "pinball",
            Variant::EpsPinball => "eps_pinball",
            Variant::Hinge => "hinge",
        }
    }

    /// Whether the loss is bounded and trained by half-quadratic iterations.
    pub fn is_bounded(&self) -> bool {
        matches!(self, Variant::EpsBaen | Variant::Baen)
    }

    /// Loss parameters after applying the variant's fixed values.
    pub fn effective_loss(&self, lp: &LossParams) -> LossParams {
        let mut out = *lp;
        match self {
            Variant::Baen | Variant::Pinball => out.eps = 0.0,
            Variant::En => out.tau = 1.0,
            _ => {}
        }
        out
    }

    /// Per-sample loss term of the primal objective (without the factor `C`).
    pub fn loss(&self, z: f64, lp: &LossParams) -> f64 {
        use crate::losses::*;
        let lp = self.effective_loss(lp);
        match self {
            Variant::EpsBaen | Variant::Baen => baen_eps_loss(z, &lp),
            Variant::AenConvex | Variant::En => aen_eps_loss(z, lp.p, lp.tau, lp.eps),
            Variant::Pinball | Variant::EpsPinball => pinball_eps_loss(z, lp.tau, lp.eps),
            Variant::Hinge => hinge_loss(z),
        }
    }

    /// Which grid axes influence this variant: `(eta, p, tau, eps)`.
    pub fn uses(&self) -> (bool, bool, bool, bool) {
        match self {
            Variant::EpsBaen => (true, true, true, true),
            Variant::Baen => (true, true, true, false),
            Variant::AenConvex => (false, true, true, true),
            Variant::En => (false, true, false, true),
            Variant::Pinball => (false, false, true, false),
            Variant::EpsPinball => (false, false, true, true),
            Variant::Hinge => (false, false, false, false),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown variant {s:?}")))
    }
}

/// One training configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub c: f64,
    /// `lambda` must be 1; it is absorbed into `c`.
    pub loss: LossParams,
    pub kernel: KernelSpec,
    pub hq_max_iter: usize,
    /// Stop when the coefficient change is below this; `None` means `1e-4 * sqrt(2n)`.
    pub hq_tol: Option<f64>,
    pub qp_tol: f64,
    /// `None` means `50 * dim`.
    pub qp_max_iter: Option<usize>,
    pub dual_form: DualForm,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            loss: LossParams::default(),
            kernel: KernelSpec::linear(),
            hq_max_iter: 50,
            hq_tol: None,
            qp_tol: 1e-6,
            qp_max_iter: None,
            dual_form: DualForm::Exact,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!("C must be positive, got {}", self.c)));
        }
        self.loss.validate()?;
        if self.loss.lambda != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda is absorbed into C and must be 1, got {}",
                self.loss.lambda
            )));
        }
        self.kernel.validate()?;
        if self.hq_max_iter == 0 {
            return Err(Error::InvalidParameter("hq_max_iter must be positive".into()));
        }
        if let Some(t) = self.hq_tol {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(format!("hq_tol must be positive, got {t}")));
            }
        }
        if !(self.qp_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("qp_tol must be positive, got {}", self.qp_tol)));
        }
        if self.qp_max_iter == Some(0) {
            return Err(Error::InvalidParameter("qp_max_iter must be positive".into()));
        }
        Ok(())
    }

    pub fn hq_tol_for(&self, n: usize) -> f64 {
        self.hq_tol.unwrap_or(1e-4 * ((2 * n) as f64).sqrt())
    }

    pub fn qp_max_iter_for(&self, dim: usize) -> usize {
        self.qp_max_iter.unwrap_or_else(|| crate::qp::default_max_iter(dim))
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_loss(mut self, loss: LossParams) -> Self {
        self.loss = loss;
        self
    }

    pub fn with_kernel(mut self, kernel: KernelSpec) -> Self {
        self.kernel = kernel;
        self
    }
}
