//! Model files: a JSON document tagged with [`MODEL_SCHEME`].
//!
//! Floats are written in shortest round-trip form (at most 17 significant
//! digits), so a loaded model reproduces decision values bit for bit.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::ScalerParams;
use crate::error::{Error, Result};

use super::model::{Model, TrainDiagnostics};
use super::{HyperParams, Variant};

pub const MODEL_SCHEME: &str = "baen-model/1";

#[derive(Serialize, Deserialize)]
struct ModelFile {
    scheme: String,
    variant: Variant,
    hyper: HyperParams,
    scaler: Option<ScalerParams>,
    n_features: usize,
    samples: Vec<Vec<f64>>,
    labels: Vec<i8>,
    alphas: Vec<f64>,
    betas: Option<Vec<f64>>,
    train_decision: Vec<f64>,
    diagnostics: TrainDiagnostics,
}

pub fn model_to_string(m: &Model) -> Result<String> {
    let file = ModelFile {
        scheme: MODEL_SCHEME.to_string(),
        variant: m.variant,
        hyper: m.hyper,
        scaler: m.scaler.clone(),
        n_features: m.samples.ncols(),
        samples: m.samples.rows().into_iter().map(|r| r.to_vec()).collect(),
        labels: m.labels.clone(),
        alphas: m.alphas.clone(),
        betas: m.betas.clone(),
        train_decision: m.train_decision.clone(),
        diagnostics: m.diagnostics.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file)?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_str(s: &str) -> Result<Model> {
    let f: ModelFile = serde_json::from_str(s)?;
    if f.scheme != MODEL_SCHEME {
        return Err(Error::ModelFormat(format!("unsupported scheme {:?}", f.scheme)));
    }
    f.hyper.validate()?;
    let n = f.labels.len();
    if f.samples.len() != n || f.alphas.len() != n || f.train_decision.len() != n {
        return Err(Error::ModelFormat("sample, label and coefficient counts differ".into()));
    }
    if f.betas.as_ref().is_some_and(|b| b.len() != n) {
        return Err(Error::ModelFormat("beta count differs from sample count".into()));
    }
    if f.samples.iter().any(|r| r.len() != f.n_features) {
        return Err(Error::ModelFormat("ragged sample rows".into()));
    }
    if f.labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::ModelFormat("labels must be +1 or -1".into()));
    }
    let flat: Vec<f64> = f.samples.into_iter().flatten().collect();
    let samples = Array2::from_shape_vec((n, f.n_features), flat).map_err(|e| Error::ModelFormat(e.to_string()))?;
    let m = Model {
        variant: f.variant,
        hyper: f.hyper,
        samples,
        labels: f.labels,
        alphas: f.alphas,
        betas: f.betas,
        scaler: None,
        train_decision: f.train_decision,
        diagnostics: f.diagnostics,
    };
    match f.scaler {
        Some(s) => m.with_scaler(s).map_err(|_| Error::ModelFormat("scaler width differs from features".into())),
        None => Ok(m),
    }
}

pub fn save_model(m: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_string(m)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&s)
}
