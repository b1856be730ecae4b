//! Declarative benchmark runs.
//!
//! A protocol file is TOML with `scheme = "baen-bench/1"`:
//!
//! ```toml
//! scheme = "baen-bench/1"
//! seed = 42
//! folds = 5
//! kernel = "rbf"
//! variants = ["eps_baen", "en", "hinge"]
//! noise = ["none", "label=0.25", "feature=0.25"]
//! alpha = 0.1
//!
//! [grid]
//! preset = "standard"
//! c = [0.25, 1.0, 4.0]        # optional per-axis overrides
//!
//! [[datasets]]
//! name = "pima"
//! path = "data/pima.csv"      # relative to the protocol file
//! label_column = "class"
//! positive_label = "1"
//!
//! [[datasets]]
//! name = "blobs"
//! synthetic = { n = 300, mu_pos = [1.0, 1.0], mu_neg = [-1.0, -1.0], seed = 7 }
//! ```
//!
//! Each dataset is standardized, noise is injected, and every variant is
//! tuned by grid search under one stratified fold plan. Outputs are a grid
//! table per (dataset, noise, variant) under `cv/`, `summary.csv`,
//! `scores_<metric>_<noise>.csv` and `report.toml`.

use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::noise::{add_feature_noise, flip_labels};
use super::stats::{FriedmanReport, ScoreMatrix};
use super::synth::{gen_gaussian_2class, SynthSpec};
use crate::data::{load_csv, load_libsvm, standardize, stratified_kfold, Dataset, LabelColumn};
use crate::error::{Error, Result};
use crate::evaluation::{grid_search, write_grid_files, GridResult, GridSpec};
use crate::kernels::KernelKind;
use crate::trainer::{HyperParams, Variant};

pub const BENCH_SCHEME: &str = "baen-bench/1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSetting {
    None,
    /// Fraction of labels flipped.
    Label(f64),
    /// Feature noise variance ratio.
    Feature(f64),
}

impl NoiseSetting {
    pub fn apply(&self, d: &Dataset, seed: u64) -> Result<Dataset> {
        match *self {
            NoiseSetting::None => Ok(d.clone()),
            NoiseSetting::Label(f) => flip_labels(d, f, seed),
            NoiseSetting::Feature(r) => add_feature_noise(d, r, seed),
        }
    }
}

impl fmt::Display for NoiseSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSetting::None => f.write_str("none"),
            NoiseSetting::Label(v) => write!(f, "label={v}"),
            NoiseSetting::Feature(v) => write!(f, "feature={v}"),
        }
    }
}

impl FromStr for NoiseSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = match s.split_once('=') {
            Some((k, v)) => {
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Protocol(format!("bad noise level in {s:?}")))?;
                (k.trim(), Some(v))
            }
            None => (s.trim(), None),
        };
        match kind {
            "none" if value.is_none() => Ok(NoiseSetting::None),
            "label" => Ok(NoiseSetting::Label(value.unwrap_or(0.25))),
            "feature" => Ok(NoiseSetting::Feature(value.unwrap_or(0.25))),
            _ => Err(Error::Protocol(format!("unknown noise setting {s:?}"))),
        }
    }
}

impl Serialize for NoiseSetting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NoiseSetting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_preset")]
    pub preset: String,
    pub c: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    pub tau: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub sigma: Option<Vec<f64>>,
}

fn default_preset() -> String {
    "standard".into()
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            preset: default_preset(),
            c: None,
            eta: None,
            p: None,
            tau: None,
            eps: None,
            sigma: None,
        }
    }
}

impl GridConfig {
    pub fn build(&self, variant: Variant, kernel: KernelKind) -> Result<GridSpec> {
        let mut g = GridSpec::preset(&self.preset, variant, kernel)?;
        let overrides = [
            (&mut g.c, &self.c),
            (&mut g.eta, &self.eta),
            (&mut g.p, &self.p),
            (&mut g.tau, &self.tau),
            (&mut g.eps, &self.eps),
            (&mut g.sigma, &self.sigma),
        ];
        for (dst, src) in overrides {
            if let Some(v) = src {
                *dst = v.clone();
            }
        }
        Ok(g)
    }
}

/// Solver settings shared by every fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub hq_max_iter: usize,
    pub hq_tol: Option<f64>,
    pub qp_tol: f64,
    pub qp_max_iter: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let hp = HyperParams::default();
        Self {
            hq_max_iter: hp.hq_max_iter,
            hq_tol: hp.hq_tol,
            qp_tol: hp.qp_tol,
            qp_max_iter: hp.qp_max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    pub path: Option<PathBuf>,
    /// `csv` or `libsvm`; inferred from the extension when absent.
    pub format: Option<String>,
    /// Column name or 0-based index; defaults to the last column.
    pub label_column: Option<String>,
    pub positive_label: Option<String>,
    pub synthetic: Option<SynthSpec>,
}

impl DatasetEntry {
    pub fn load(&self, base_dir: &Path) -> Result<Dataset> {
        let d = match (&self.path, &self.synthetic) {
            (Some(p), None) => {
                let path = base_dir.join(p);
                let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
                let format = self.format.as_deref().unwrap_or(if ext.eq_ignore_ascii_case("csv") { "csv" } else { "libsvm" });
                match format {
                    "csv" => {
                        let label = match &self.label_column {
                            Some(c) => c.parse().expect("label column parse is infallible"),
                            None => last_column(&path)?,
                        };
                        load_csv(&path, &label, self.positive_label.as_deref())?
                    }
                    "libsvm" => load_libsvm(&path)?,
                    other => return Err(Error::Protocol(format!("unknown dataset format {other:?}"))),
                }
            }
            (None, Some(spec)) => gen_gaussian_2class(spec)?,
            _ => {
                return Err(Error::Protocol(format!(
                    "dataset {:?} needs exactly one of `path` or `synthetic`",
                    self.name
                )))
            }
        };
        Ok(d.with_source_id(self.name.clone()))
    }
}

fn last_column(path: &Path) -> Result<LabelColumn> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Protocol(format!("{other:?}")),
    })?;
    let n = r.headers()?.len();
    if n == 0 {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(LabelColumn::Index(n - 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub scheme: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
    #[serde(default = "default_offset")]
    pub bias_offset: f64,
    pub variants: Vec<Variant>,
    #[serde(default = "default_noise")]
    pub noise: Vec<NoiseSetting>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub datasets: Vec<DatasetEntry>,
}

fn default_seed() -> u64 {
    42
}
fn default_folds() -> usize {
    5
}
fn default_kernel() -> KernelKind {
    KernelKind::Linear
}
fn default_offset() -> f64 {
    1.0
}
fn default_noise() -> Vec<NoiseSetting> {
    vec![NoiseSetting::None]
}
fn default_alpha() -> f64 {
    0.1
}

impl BenchConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: BenchConfig = toml::from_str(s).map_err(|e| Error::Protocol(e.message().to_string()))?;
        if cfg.scheme != BENCH_SCHEME {
            return Err(Error::Protocol(format!("unsupported scheme {:?}, expected {BENCH_SCHEME:?}", cfg.scheme)));
        }
        if cfg.variants.is_empty() || cfg.datasets.is_empty() || cfg.noise.is_empty() {
            return Err(Error::Protocol("variants, datasets and noise must be nonempty".into()));
        }
        let mut names: Vec<&str> = cfg.datasets.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Protocol("dataset names must be unique".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    fn base_hyper(&self) -> HyperParams {
        let mut hp = HyperParams::default();
        hp.kernel.bias_offset = self.bias_offset;
        hp.hq_max_iter = self.solver.hq_max_iter;
        hp.hq_tol = self.solver.hq_tol;
        hp.qp_tol = self.solver.qp_tol;
        hp.qp_max_iter = self.solver.qp_max_iter;
        hp
    }
}

/// Best grid point of one (dataset, noise, variant) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dataset: String,
    pub noise: NoiseSetting,
    pub variant: Variant,
    pub best_c: f64,
    pub best_eta: f64,
    pub best_p: f64,
    pub best_tau: f64,
    pub best_eps: f64,
    pub best_sigma: Option<f64>,
    pub mean_acc: f64,
    pub sd_acc: f64,
    pub mean_f1: f64,
    pub sd_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutput {
    pub rows: Vec<BenchRow>,
    pub reports: Vec<(NoiseSetting, String, FriedmanReport)>,
    pub files: Vec<PathBuf>,
}

fn file_token(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

fn derived_seed(seed: u64, dataset: usize, noise: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(((dataset as u64) << 16) | noise as u64)
}

#[derive(Serialize)]
struct ReportFile<'a> {
    scheme: &'a str,
    seed: u64,
    folds: usize,
    tests: Vec<ReportEntry<'a>>,
}

#[derive(Serialize)]
struct ReportEntry<'a> {
    noise: String,
    metric: &'a str,
    #[serde(flatten)]
    report: &'a FriedmanReport,
}

/// Runs the protocol, writing outputs under `out_dir`. `header` (e.g. a
/// timestamp) becomes a comment line at the top of `report.toml` only.
pub fn run_bench(cfg: &BenchConfig, base_dir: &Path, out_dir: &Path, header: Option<&str>) -> Result<BenchOutput> {
    let cv_dir = out_dir.join("cv");
    fs::create_dir_all(&cv_dir).map_err(|e| Error::io(&cv_dir, e))?;
    let base = cfg.base_hyper();
    let mut rows = Vec::new();
    let mut files = Vec::new();

    for (di, entry) in cfg.datasets.iter().enumerate() {
        let raw = entry.load(base_dir)?;
        let (scaled, _) = standardize(&raw);
        for (ni, noise) in cfg.noise.iter().enumerate() {
            let noisy = noise.apply(&scaled, derived_seed(cfg.seed, di, ni))?;
            let plan = stratified_kfold(&noisy, cfg.folds, cfg.seed)?;
            for &variant in &cfg.variants {
                let grid = cfg.grid.build(variant, cfg.kernel)?;
                let result: GridResult = grid_search(&noisy, &grid, &plan, &base)?;
                let stem = format!(
                    "{}__{}__{}",
                    file_token(&entry.name),
                    file_token(&noise.to_string()),
                    variant
                );
                let csv_path = cv_dir.join(format!("{stem}.csv"));
                let jsonl_path = cv_dir.join(format!("{stem}.jsonl"));
                write_grid_files(&csv_path, Some(&jsonl_path), &entry.name, &result)?;
                files.push(csv_path);
                files.push(jsonl_path);
                let best = result.best_row();
                rows.push(BenchRow {
                    dataset: entry.name.clone(),
                    noise: *noise,
                    variant,
                    best_c: best.point.c,
                    best_eta: best.point.eta,
                    best_p: best.point.p,
                    best_tau: best.point.tau,
                    best_eps: best.point.eps,
                    best_sigma: best.point.sigma,
                    mean_acc: best.cv.mean_acc,
                    sd_acc: best.cv.sd_acc,
                    mean_f1: best.cv.mean_f1,
                    sd_f1: best.cv.sd_f1,
                });
            }
        }
    }

    let summary = out_dir.join("summary.csv");
    write_summary(&summary, &rows)?;
    files.push(summary);

    let variant_names: Vec<String> = cfg.variants.iter().map(|v| v.to_string()).collect();
    let dataset_names: Vec<String> = cfg.datasets.iter().map(|d| d.name.clone()).collect();
    let mut reports = Vec::new();
    for noise in &cfg.noise {
        for metric in ["acc", "f1"] {
            let values: Vec<Vec<f64>> = dataset_names
                .iter()
                .map(|ds| {
                    cfg.variants
                        .iter()
                        .map(|v| {
                            let r = rows
                                .iter()
                                .find(|r| &r.dataset == ds && r.noise == *noise && r.variant == *v)
                                .expect("every cell ran");
                            if metric == "acc" {
                                r.mean_acc
                            } else {
                                r.mean_f1
                            }
                        })
                        .collect()
                })
                .collect();
            let matrix = ScoreMatrix {
                classifiers: variant_names.clone(),
                datasets: dataset_names.clone(),
                values,
            };
            let path = out_dir.join(format!("scores_{metric}_{}.csv", file_token(&noise.to_string())));
            let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            matrix.write_csv(BufWriter::new(f))?;
            files.push(path);
            if matrix.classifiers.len() >= 2 && matrix.datasets.len() >= 2 {
                let rep = FriedmanReport::compute(&matrix.classifiers, &matrix.by_classifier(), true, cfg.alpha)?;
                reports.push((*noise, metric.to_string(), rep));
            }
        }
    }

    let report_path = out_dir.join("report.toml");
    let file = ReportFile {
        scheme: "baen-report/1",
        seed: cfg.seed,
        folds: cfg.folds,
        tests: reports
            .iter()
            .map(|(n, m, r)| ReportEntry {
                noise: n.to_string(),
                metric: m,
                report: r,
            })
            .collect(),
    };
    let mut text = String::new();
    if let Some(h) = header {
        text.push_str(&format!("# {h}\n"));
    }
    text.push_str(&toml::to_string(&file).map_err(|e| Error::Protocol(e.to_string()))?);
    fs::write(&report_path, text).map_err(|e| Error::io(&report_path, e))?;
    files.push(report_path);

    Ok(BenchOutput { rows, reports, files })
}

fn write_summary(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(f));
    w.write_record([
        "dataset", "noise", "variant", "C", "eta", "p", "tau", "eps", "sigma", "mean_acc", "sd_acc", "mean_f1", "sd_f1",
    ])?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.noise.to_string(),
            r.variant.to_string(),
            r.best_c.to_string(),
            r.best_eta.to_string(),
            r.best_p.to_string(),
            r.best_tau.to_string(),
            r.best_eps.to_string(),
            r.best_sigma.map(|s| s.to_string()).unwrap_or_default(),
            r.mean_acc.to_string(),
            r.sd_acc.to_string(),
            r.mean_f1.to_string(),
            r.sd_f1.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_settings_parse() {
        assert_eq!("none".parse::<NoiseSetting>().unwrap(), NoiseSetting::None);
        assert_eq!("label".parse::<NoiseSetting>().unwrap(), NoiseSetting::Label(0.25));
        assert_eq!("feature=0.5".parse::<NoiseSetting>().unwrap(), NoiseSetting::Feature(0.5));
        assert!("shuffle".parse::<NoiseSetting>().is_err());
        assert!("none=1".parse::<NoiseSetting>().is_err());
    }

    #[test]
    fn config_requires_scheme() {
        let text = r#"
            scheme = "baen-bench/2"
            variants = ["hinge"]
            [[datasets]]
            name = "a"
            synthetic = { n = 20 }
        "#;
        assert!(matches!(BenchConfig::from_toml_str(text), Err(Error::Protocol(_))));
        let ok = text.replace("bench/2", "bench/1");
        let cfg = BenchConfig::from_toml_str(&ok).unwrap();
        assert_eq!(cfg.folds, 5);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.noise, vec![NoiseSetting::None]);
        assert_eq!(cfg.datasets[0].synthetic.unwrap().n, 20);
    }

    #[test]
    fn grid_overrides_apply() {
        let g = GridConfig {
            c: Some(vec![1.0, 2.0]),
            ..GridConfig::default()
        };
        let spec = g.build(Variant::Hinge, KernelKind::Linear).unwrap();
        assert_eq!(spec.c, vec![1.0, 2.0]);
        assert_eq!(spec.points().len(), 2);
    }
}
