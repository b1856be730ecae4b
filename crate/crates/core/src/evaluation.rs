//! Metrics, stratified cross-validation and grid search.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{apply_scaler, Dataset, FoldPlan, ScalerParams};
use crate::error::{Error, Result};
use crate::kernels::{gram_symmetric, KernelKind, KernelSpec};
use crate::trainer::{fit, fit_with_gram, HyperParams, Model, SignedGram, Variant};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    /// Counts with `+1` as the positive class.
    pub fn from_labels(truth: &[i8], predicted: &[i8]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                got: predicted.len(),
            });
        }
        let mut c = Confusion::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t > 0, p > 0) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn accuracy(c: &Confusion) -> Result<f64> {
    if c.total() == 0 {
        return Err(Error::InvalidDataset("accuracy of an empty evaluation set".into()));
    }
    Ok((c.tp + c.tn) as f64 / c.total() as f64)
}

/// `2tp / (2tp + fp + fn)`, and 0 when that denominator is 0.
pub fn f1(c: &Confusion) -> f64 {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * c.tp) as f64 / denom as f64
    }
}

/// Confusion of `m` on `d`.
pub fn evaluate(m: &Model, d: &Dataset) -> Result<Confusion> {
    Confusion::from_labels(d.labels(), &m.predict(d.samples())?)
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub acc: f64,
    pub f1: f64,
    pub confusion: Confusion,
    /// The test fold contained only one class.
    pub single_class: bool,
    pub hq_iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub variant: Variant,
    pub hyper: HyperParams,
    pub folds: Vec<FoldResult>,
    pub mean_acc: f64,
    pub sd_acc: f64,
    pub mean_f1: f64,
    pub sd_f1: f64,
}

impl CvResult {
    fn from_folds(variant: Variant, hyper: HyperParams, folds: Vec<FoldResult>) -> Self {
        let accs: Vec<f64> = folds.iter().map(|f| f.acc).collect();
        let f1s: Vec<f64> = folds.iter().map(|f| f.f1).collect();
        let (mean_acc, sd_acc) = mean_sd(&accs);
        let (mean_f1, sd_f1) = mean_sd(&f1s);
        Self {
            variant,
            hyper,
            folds,
            mean_acc,
            sd_acc,
            mean_f1,
            sd_f1,
        }
    }
}

/// Training split standardized with its own scaler, and the test split
/// transformed with that scaler.
pub struct FoldData {
    pub train: Dataset,
    pub test: Dataset,
    pub scaler: ScalerParams,
}

pub fn fold_data(d: &Dataset, plan: &FoldPlan, fold: usize) -> Result<FoldData> {
    if plan.assignments.len() != d.len() {
        return Err(Error::DimensionMismatch {
            expected: d.len(),
            got: plan.assignments.len(),
        });
    }
    let train_raw = d.subset(&plan.train_indices(fold));
    let test_raw = d.subset(&plan.test_indices(fold));
    let scaler = ScalerParams::fit(train_raw.samples());
    Ok(FoldData {
        train: apply_scaler(&train_raw, &scaler)?,
        test: apply_scaler(&test_raw, &scaler)?,
        scaler,
    })
}

fn score_fold(fold: usize, m: &Model, test: &Dataset) -> Result<FoldResult> {
    let confusion = evaluate(m, test)?;
    let (pos, neg) = test.class_counts();
    let diag = m.diagnostics();
    Ok(FoldResult {
        fold,
        acc: accuracy(&confusion)?,
        f1: f1(&confusion),
        confusion,
        single_class: pos == 0 || neg == 0,
        hq_iterations: diag.hq_iterations,
        converged: diag.converged,
        kkt_residual: diag.kkt_residual,
    })
}

pub fn cross_validate(d: &Dataset, variant: Variant, hp: &HyperParams, plan: &FoldPlan) -> Result<CvResult> {
    cross_validate_with_models(d, variant, hp, plan).map(|(r, _)| r)
}

/// [`cross_validate`] that also returns the per-fold models (trained on
/// standardized training splits, with their scalers attached).
pub fn cross_validate_with_models(
    d: &Dataset,
    variant: Variant,
    hp: &HyperParams,
    plan: &FoldPlan,
) -> Result<(CvResult, Vec<Model>)> {
    hp.validate()?;
    let out: Vec<(FoldResult, Model)> = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let fd = fold_data(d, plan, fold)?;
            let m = fit(&fd.train, variant, hp)?;
            let r = score_fold(fold, &m, &fd.test)?;
            Ok((r, m.with_scaler(fd.scaler)?))
        })
        .collect::<Result<_>>()?;
    let (folds, models): (Vec<_>, Vec<_>) = out.into_iter().unzip();
    Ok((CvResult::from_folds(variant, *hp, folds), models))
}

/// One point of a [`GridSpec`]; axes the variant ignores hold their first value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    pub eta: f64,
    pub p: f64,
    pub tau: f64,
    pub eps: f64,
    /// RBF width; `None` for the linear kernel.
    pub sigma: Option<f64>,
}

impl GridPoint {
    fn key(&self) -> [f64; 6] {
        [self.c, self.eta, self.p, self.tau, self.eps, self.sigma.unwrap_or(0.0)]
    }

    pub fn apply(&self, base: &HyperParams) -> HyperParams {
        let mut hp = *base;
        hp.c = self.c;
        hp.loss.eta = self.eta;
        hp.loss.p = self.p;
        hp.loss.tau = self.tau;
        hp.loss.eps = self.eps;
        hp.kernel = match self.sigma {
            Some(s) => KernelSpec::rbf(s).with_offset(base.kernel.bias_offset),
            None => KernelSpec::linear().with_offset(base.kernel.bias_offset),
        };
        hp
    }
}

/// Candidate values for each hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub variant: Variant,
    pub kernel: KernelKind,
    pub c: Vec<f64>,
    pub eta: Vec<f64>,
    pub p: Vec<f64>,
    pub tau: Vec<f64>,
    pub eps: Vec<f64>,
    pub sigma: Vec<f64>,
}

fn powers_of_two(lo: i32, hi: i32, step: usize) -> Vec<f64> {
    (lo..=hi).step_by(step).map(|e| 2f64.powi(e)).collect()
}

impl GridSpec {
    /// `C ∈ {2^-8, ..., 2^8}`, `η ∈ {2^-6, 2^-4, ..., 2^6}`, `τ ∈ {0.1, 0.3, 0.6, 1}`,
    /// `p ∈ {0.3, 0.5, 0.7}`, `ε = 0.1`, `σ ∈ {2^-4, ..., 2^4}`.
    pub fn standard(variant: Variant, kernel: KernelKind) -> Self {
        Self {
            variant,
            kernel,
            c: powers_of_two(-8, 8, 1),
            eta: powers_of_two(-6, 6, 2),
            p: vec![0.3, 0.5, 0.7],
            tau: vec![0.1, 0.3, 0.6, 1.0],
            eps: vec![0.1],
            sigma: powers_of_two(-4, 4, 1),
        }
    }

    /// [`GridSpec::standard`] with the coarser `C ∈ {2^-8, 2^-6, ..., 2^8}`.
    pub fn coarse_c(variant: Variant, kernel: KernelKind) -> Self {
        Self {
            c: powers_of_two(-8, 8, 2),
            ..Self::standard(variant, kernel)
        }
    }

    pub fn preset(name: &str, variant: Variant, kernel: KernelKind) -> Result<Self> {
        match name {
            "standard" => Ok(Self::standard(variant, kernel)),
            "coarse_c" => Ok(Self::coarse_c(variant, kernel)),
            other => Err(Error::InvalidParameter(format!("unknown grid preset {other:?}"))),
        }
    }

    /// A grid holding exactly the values of `hp`.
    pub fn single(variant: Variant, hp: &HyperParams) -> Self {
        Self {
            variant,
            kernel: hp.kernel.kind,
            c: vec![hp.c],
            eta: vec![hp.loss.eta],
            p: vec![hp.loss.p],
            tau: vec![hp.loss.tau],
            eps: vec![hp.loss.eps],
            sigma: vec![hp.kernel.sigma],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let axes: [(&str, &Vec<f64>); 6] = [
            ("C", &self.c),
            ("eta", &self.eta),
            ("p", &self.p),
            ("tau", &self.tau),
            ("eps", &self.eps),
            ("sigma", &self.sigma),
        ];
        for (name, values) in axes {
            if values.is_empty() && !(name == "sigma" && self.kernel == KernelKind::Linear) {
                return Err(Error::InvalidParameter(format!("grid axis {name} is empty")));
            }
        }
        for point in self.points() {
            point.apply(&HyperParams::default()).validate()?;
        }
        Ok(())
    }

    /// Grid points in lexicographic axis order `(C, η, p, τ, ε, σ)`, only
    /// varying the axes the variant uses.
    pub fn points(&self) -> Vec<GridPoint> {
        let (use_eta, use_p, use_tau, use_eps) = self.variant.uses();
        let pick = |used: bool, v: &Vec<f64>| -> Vec<f64> {
            if used {
                v.clone()
            } else {
                v.first().copied().into_iter().collect()
            }
        };
        let sigmas: Vec<Option<f64>> = match self.kernel {
            KernelKind::Linear => vec![None],
            KernelKind::Rbf => self.sigma.iter().map(|&s| Some(s)).collect(),
        };
        let mut out = Vec::new();
        for &c in &self.c {
            for &eta in &pick(use_eta, &self.eta) {
                for &p in &pick(use_p, &self.p) {
                    for &tau in &pick(use_tau, &self.tau) {
                        for &eps in &pick(use_eps, &self.eps) {
                            for &sigma in &sigmas {
                                out.push(GridPoint { c, eta, p, tau, eps, sigma });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub point: GridPoint,
    pub cv: CvResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: usize,
    pub rows: Vec<GridRow>,
}

impl GridResult {
    pub fn best_row(&self) -> &GridRow {
        &self.rows[self.best]
    }

    pub fn best_hyper(&self) -> HyperParams {
        self.best_row().cv.hyper
    }
}

/// Index of the row with the highest mean accuracy, then highest mean F1,
/// then the smallest parameter tuple.
pub fn select_best(rows: &[GridRow]) -> Option<usize> {
    (0..rows.len()).reduce(|best, i| {
        let (a, b) = (&rows[i], &rows[best]);
        let better = a
            .cv
            .mean_acc
            .total_cmp(&b.cv.mean_acc)
            .then(a.cv.mean_f1.total_cmp(&b.cv.mean_f1))
            .then_with(|| {
                let (ka, kb) = (a.point.key(), b.point.key());
                kb.iter().zip(&ka).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
            });
        if better.is_gt() {
            i
        } else {
            best
        }
    })
}

/// Exhaustive search over `grid`, scoring each point by cross-validation on
/// `plan`. `base` supplies solver settings and the kernel bias offset.
///
/// Kernel matrices are computed once per (fold, σ) and shared by every point
/// with that σ. Rows come back in [`GridSpec::points`] order.
pub fn grid_search(d: &Dataset, grid: &GridSpec, plan: &FoldPlan, base: &HyperParams) -> Result<GridResult> {
    grid.validate()?;
    let points = grid.points();
    let folds: Vec<FoldData> = (0..plan.k).map(|f| fold_data(d, plan, f)).collect::<Result<_>>()?;
    let mut rows: Vec<Option<GridRow>> = vec![None; points.len()];
    let mut sigma_groups: Vec<Option<f64>> = Vec::new();
    for p in &points {
        if !sigma_groups.iter().any(|s| s.map(f64::to_bits) == p.sigma.map(f64::to_bits)) {
            sigma_groups.push(p.sigma);
        }
    }
    for sigma in sigma_groups {
        let members: Vec<usize> = (0..points.len())
            .filter(|&i| points[i].sigma.map(f64::to_bits) == sigma.map(f64::to_bits))
            .collect();
        let kernel = points[members[0]].apply(base).kernel;
        let grams: Vec<SignedGram> = folds
            .par_iter()
            .map(|fd| SignedGram::new(&gram_symmetric(fd.train.samples().view(), &kernel), fd.train.labels()))
            .collect::<Result<_>>()?;
        let tasks: Vec<(usize, usize)> = members.iter().flat_map(|&i| (0..plan.k).map(move |f| (i, f))).collect();
        let results: Vec<FoldResult> = tasks
            .par_iter()
            .map(|&(i, f)| {
                let hp = points[i].apply(base);
                let m = fit_with_gram(&folds[f].train, &grams[f], grid.variant, &hp)?;
                score_fold(f, &m, &folds[f].test)
            })
            .collect::<Result<_>>()?;
        for (chunk, &i) in results.chunks(plan.k).zip(&members) {
            rows[i] = Some(GridRow {
                point: points[i],
                cv: CvResult::from_folds(grid.variant, points[i].apply(base), chunk.to_vec()),
            });
        }
    }
    let rows: Vec<GridRow> = rows.into_iter().map(|r| r.expect("every point evaluated")).collect();
    let best = select_best(&rows).ok_or_else(|| Error::InvalidParameter("empty grid".into()))?;
    Ok(GridResult { best, rows })
}

fn fmt_sigma(s: Option<f64>) -> String {
    s.map(|v| v.to_string()).unwrap_or_default()
}

pub const CV_CSV_HEADER: [&str; 14] = [
    "dataset", "variant", "kernel", "C", "eta", "p", "tau", "eps", "sigma", "mean_acc", "sd_acc", "mean_f1", "sd_f1",
    "flagged_folds",
];

/// One summary row per grid point.
pub fn write_grid_csv<W: Write>(out: W, dataset: &str, result: &GridResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CV_CSV_HEADER)?;
    for row in &result.rows {
        w.write_record(summary_record(dataset, &row.point, &row.cv))?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

fn summary_record(dataset: &str, point: &GridPoint, cv: &CvResult) -> Vec<String> {
    let flagged = cv.folds.iter().filter(|f| f.single_class).count();
    vec![
        dataset.to_string(),
        cv.variant.to_string(),
        cv.hyper.kernel.kind.to_string(),
        point.c.to_string(),
        point.eta.to_string(),
        point.p.to_string(),
        point.tau.to_string(),
        point.eps.to_string(),
        fmt_sigma(point.sigma),
        cv.mean_acc.to_string(),
        cv.sd_acc.to_string(),
        cv.mean_f1.to_string(),
        cv.sd_f1.to_string(),
        flagged.to_string(),
    ]
}

/// One summary row for a single cross-validation run.
pub fn write_cv_csv<W: Write>(out: W, dataset: &str, cv: &CvResult) -> Result<()> {
    let point = GridPoint {
        c: cv.hyper.c,
        eta: cv.hyper.loss.eta,
        p: cv.hyper.loss.p,
        tau: cv.hyper.loss.tau,
        eps: cv.hyper.loss.eps,
        sigma: (cv.hyper.kernel.kind == KernelKind::Rbf).then_some(cv.hyper.kernel.sigma),
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CV_CSV_HEADER)?;
    w.write_record(summary_record(dataset, &point, cv))?;
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

#[derive(Serialize)]
struct FoldRecord<'a> {
    dataset: &'a str,
    variant: Variant,
    kernel: KernelKind,
    c: f64,
    eta: f64,
    p: f64,
    tau: f64,
    eps: f64,
    sigma: Option<f64>,
    #[serde(flatten)]
    fold: &'a FoldResult,
}

/// One JSON object per line for each (grid point, fold).
pub fn write_fold_jsonl<W: Write>(mut out: W, dataset: &str, result: &GridResult) -> Result<()> {
    for row in &result.rows {
        for fold in &row.cv.folds {
            let rec = FoldRecord {
                dataset,
                variant: row.cv.variant,
                kernel: row.cv.hyper.kernel.kind,
                c: row.point.c,
                eta: row.point.eta,
                p: row.point.p,
                tau: row.point.tau,
                eps: row.point.eps,
                sigma: row.point.sigma,
                fold,
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n").map_err(|e| Error::io("<jsonl output>", e))?;
        }
    }
    Ok(())
}

pub fn write_grid_files(csv_path: &Path, jsonl_path: Option<&Path>, dataset: &str, result: &GridResult) -> Result<()> {
    let f = std::fs::File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
    write_grid_csv(std::io::BufWriter::new(f), dataset, result)?;
    if let Some(p) = jsonl_path {
        let f = std::fs::File::create(p).map_err(|e| Error::io(p, e))?;
        let mut w = std::io::BufWriter::new(f);
        write_fold_jsonl(&mut w, dataset, result)?;
        w.flush().map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}
