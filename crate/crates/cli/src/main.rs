use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use baen_svm::data::{load_csv, load_libsvm, standardize, stratified_kfold, write_csv, Dataset, LabelColumn};
use baen_svm::evaluation::{cross_validate, grid_search, write_cv_csv, write_grid_files, GridSpec};
use baen_svm::experiments::{
    gen_gaussian_2class, inject_outliers, run_bench, BenchConfig, FriedmanReport, OutlierTarget, ScoreMatrix,
    SynthSpec,
};
use baen_svm::experiments::{bayes_margin, boundary_angle, true_bayes_margin};
use baen_svm::kernels::{KernelKind, KernelSpec};
use baen_svm::losses::LossParams;
use baen_svm::trainer::{fit, load_model, save_model, DualForm, HyperParams, Variant};
use baen_svm::{verify, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;

#[derive(Parser)]
#[command(name = "baen", version, about = "Robust kernel SVMs with the bounded asymmetric elastic net loss")]
struct Cli {
    /// Seed for every random component.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads [default: available parallelism].
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and write it to a file.
    Train(TrainArgs),
    /// Write predicted labels and decision values for a dataset.
    Predict(PredictArgs),
    /// Stratified cross-validation of one configuration.
    Cv(CvArgs),
    /// Grid search with stratified cross-validation.
    Grid(GridArgs),
    /// Run a benchmark protocol file.
    Bench(BenchArgs),
    /// Write the two-Gaussian datasets and decision-boundary lattices.
    Synth(SynthArgs),
    /// Friedman and Nemenyi tests on a scores CSV.
    Stats(StatsArgs),
    /// Cross-check the solvers against reference implementations.
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Libsvm,
}

#[derive(Args)]
struct DataArgs {
    /// Input dataset.
    #[arg(long)]
    data: PathBuf,

    /// File format [default: from the extension, `.csv` or libsvm otherwise].
    #[arg(long, value_enum)]
    format: Option<Format>,

    /// CSV label column, by name or 0-based index [default: last column].
    #[arg(long)]
    label_column: Option<String>,

    /// CSV label value mapped to +1 [default: 1 for {0,1} or {-1,1} labels].
    #[arg(long)]
    positive_label: Option<String>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset, Error> {
        let is_csv = match self.format {
            Some(Format::Csv) => true,
            Some(Format::Libsvm) => false,
            None => self
                .data
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("csv")),
        };
        if !is_csv {
            return load_libsvm(&self.data);
        }
        let label = match &self.label_column {
            Some(c) => c.parse().expect("label column parse is infallible"),
            None => LabelColumn::Index(csv_width(&self.data)?.saturating_sub(1)),
        };
        load_csv(&self.data, &label, self.positive_label.as_deref())
    }
}

fn csv_width(path: &Path) -> Result<usize, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    let first = text.lines().next().ok_or_else(|| Error::EmptyFile(path.to_path_buf()))?;
    Ok(first.split(',').count())
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Loss trade-off C.
    #[arg(long = "c", default_value_t = 1.0)]
    c: f64,

    /// Bounding sharpness eta.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,

    /// Quadratic/linear mix p in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    p: f64,

    /// Asymmetry tau in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    tau: f64,

    /// Insensitive band half-width eps.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,

    /// Kernel.
    #[arg(long, default_value = "linear", value_parser = parse_kernel)]
    kernel: KernelKind,

    /// RBF width sigma in exp(-sigma |x - x'|^2).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,

    /// Constant added to the kernel (absorbs the bias).
    #[arg(long, default_value_t = 1.0)]
    bias_offset: f64,

    /// Maximum half-quadratic iterations.
    #[arg(long, default_value_t = 50)]
    hq_max_iter: usize,

    /// Half-quadratic stopping tolerance [default: 1e-4 * sqrt(2n)].
    #[arg(long)]
    hq_tol: Option<f64>,

    /// Projected-gradient tolerance of each QP.
    #[arg(long, default_value_t = 1e-6)]
    qp_tol: f64,

    /// Coordinate updates per QP [default: 50 * dimension].
    #[arg(long)]
    qp_max_iter: Option<usize>,

    /// Dual of the weighted subproblem.
    #[arg(long, default_value = "exact", value_parser = parse_dual_form)]
    dual_form: DualForm,
}

impl ModelArgs {
    fn hyper(&self) -> Result<HyperParams, Error> {
        let kernel = match self.kernel {
            KernelKind::Linear => KernelSpec::linear(),
            KernelKind::Rbf => KernelSpec::rbf(self.sigma),
        }
        .with_offset(self.bias_offset);
        let hp = HyperParams {
            c: self.c,
            loss: LossParams {
                lambda: 1.0,
                eta: self.eta,
                p: self.p,
                tau: self.tau,
                eps: self.eps,
            },
            kernel,
            hq_max_iter: self.hq_max_iter,
            hq_tol: self.hq_tol,
            qp_tol: self.qp_tol,
            qp_max_iter: self.qp_max_iter,
            dual_form: self.dual_form,
        };
        hp.validate()?;
        Ok(hp)
    }
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kernel(s: &str) -> Result<KernelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_dual_form(s: &str) -> Result<DualForm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Training objective.
    #[arg(long, default_value = "eps_baen", value_parser = parse_variant)]
    variant: Variant,

    #[command(flatten)]
    model: ModelArgs,

    /// Skip standardization of the features [default: off]
    #[arg(long)]
    no_standardize: bool,

    /// Output model file.
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Model file written by `train`.
    #[arg(long)]
    model: PathBuf,

    #[command(flatten)]
    data: DataArgs,

    /// Output CSV with columns index,label,predicted,decision_value.
    #[arg(long, default_value = "predictions.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Training objective.
    #[arg(long, default_value = "eps_baen", value_parser = parse_variant)]
    variant: Variant,

    #[command(flatten)]
    model: ModelArgs,

    /// Number of folds.
    #[arg(long, default_value_t = 5)]
    folds: usize,

    /// Output CSV.
    #[arg(long, default_value = "cv.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Training objective.
    #[arg(long, default_value = "eps_baen", value_parser = parse_variant)]
    variant: Variant,

    #[command(flatten)]
    model: ModelArgs,

    /// Named grid: `standard` or `coarse_c`.
    #[arg(long, default_value = "standard")]
    preset: String,

    /// Comma-separated C values overriding the preset [default: preset values]
    #[arg(long = "grid-c", value_delimiter = ',')]
    grid_c: Option<Vec<f64>>,

    /// Comma-separated eta values overriding the preset [default: preset values]
    #[arg(long = "grid-eta", value_delimiter = ',')]
    grid_eta: Option<Vec<f64>>,

    /// Comma-separated p values overriding the preset [default: preset values]
    #[arg(long = "grid-p", value_delimiter = ',')]
    grid_p: Option<Vec<f64>>,

    /// Comma-separated tau values overriding the preset [default: preset values]
    #[arg(long = "grid-tau", value_delimiter = ',')]
    grid_tau: Option<Vec<f64>>,

    /// Comma-separated eps values overriding the preset [default: preset values]
    #[arg(long = "grid-eps", value_delimiter = ',')]
    grid_eps: Option<Vec<f64>>,

    /// Comma-separated sigma values overriding the preset [default: preset values]
    #[arg(long = "grid-sigma", value_delimiter = ',')]
    grid_sigma: Option<Vec<f64>>,

    /// Number of folds.
    #[arg(long, default_value_t = 5)]
    folds: usize,

    /// Output CSV, one row per grid point.
    #[arg(long, default_value = "grid.csv")]
    out: PathBuf,

    /// JSON-lines file with one record per (grid point, fold) [default: none]
    #[arg(long)]
    jsonl: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Protocol file (TOML, scheme "baen-bench/1").
    #[arg(long)]
    protocol: PathBuf,

    /// Output directory.
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long, default_value = "synth-out")]
    out: PathBuf,

    /// Samples in the clean dataset.
    #[arg(long, default_value_t = 150)]
    n: usize,

    /// Label-noise outliers per contaminated class.
    #[arg(long, default_value_t = 3)]
    outliers: usize,

    /// Lattice points per axis of the boundary dump.
    #[arg(long, default_value_t = 200)]
    resolution: usize,

    /// Relative padding of the data bounding box.
    #[arg(long, default_value_t = 0.1)]
    padding: f64,

    /// Comma-separated variants whose decision values are added to the lattice.
    #[arg(long, value_delimiter = ',', default_value = "eps_baen,hinge", value_parser = parse_variant)]
    variants: Vec<Variant>,

    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct StatsArgs {
    /// CSV with a dataset column followed by one column per classifier.
    #[arg(long)]
    scores: PathBuf,

    /// Significance level of the Nemenyi test (0.05 or 0.1).
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,

    /// Treat lower scores as better [default: off]
    #[arg(long)]
    lower_is_better: bool,

    /// Output report.
    #[arg(long, default_value = "report.toml")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: config: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}: {}", e.category(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Cv(a) => cv(a, cli.seed),
        Command::Grid(a) => grid(a, cli.seed),
        Command::Bench(a) => bench(a),
        Command::Synth(a) => synth(a, cli.seed),
        Command::Stats(a) => stats(a),
        Command::Verify => verify_all(cli.seed),
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, Error> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::Io { path: parent.to_path_buf(), source: e })?;
    }
    let f = fs::File::create(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    Ok(BufWriter::new(f))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io { path: path.to_path_buf(), source: e }
}

fn timestamp() -> String {
    format!("generated {}", chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ"))
}

fn train(a: TrainArgs) -> Result<ExitCode, Error> {
    let hp = a.model.hyper()?;
    let d = a.data.load()?;
    let model = if a.no_standardize {
        fit(&d, a.variant, &hp)?
    } else {
        let (scaled, scaler) = standardize(&d);
        fit(&scaled, a.variant, &hp)?.with_scaler(scaler)?
    };
    save_model(&model, &a.out)?;
    let diag = model.diagnostics();
    println!(
        "trained {} on {} samples: hq_iterations={} converged={} support_vectors={} objective={}",
        model.variant(),
        d.len(),
        diag.hq_iterations,
        diag.converged,
        model.support_vectors(model.default_sv_tol()).len(),
        diag.objective_trace.last().copied().unwrap_or(f64::NAN)
    );
    Ok(ExitCode::SUCCESS)
}

fn predict(a: PredictArgs) -> Result<ExitCode, Error> {
    let model = load_model(&a.model)?;
    let d = a.data.load()?;
    let scores = model.decision_values(d.samples())?;
    let mut w = create(&a.out)?;
    let write = |w: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        writeln!(w, "index,label,predicted,decision_value")?;
        for (i, (&f, &y)) in scores.iter().zip(d.labels()).enumerate() {
            let pred = if f >= 0.0 { 1 } else { -1 };
            writeln!(w, "{i},{y},{pred},{f}")?;
        }
        w.flush()
    };
    write(&mut w).map_err(io_err(&a.out))?;
    Ok(ExitCode::SUCCESS)
}

fn cv(a: CvArgs, seed: u64) -> Result<ExitCode, Error> {
    let hp = a.model.hyper()?;
    let d = a.data.load()?;
    let plan = stratified_kfold(&d, a.folds, seed)?;
    let result = cross_validate(&d, a.variant, &hp, &plan)?;
    write_cv_csv(create(&a.out)?, d.source_id(), &result)?;
    println!(
        "{}: acc {:.4} ± {:.4}, f1 {:.4} ± {:.4}",
        a.variant, result.mean_acc, result.sd_acc, result.mean_f1, result.sd_f1
    );
    Ok(ExitCode::SUCCESS)
}

fn grid(a: GridArgs, seed: u64) -> Result<ExitCode, Error> {
    let base = a.model.hyper()?;
    let d = a.data.load()?;
    let mut spec = GridSpec::preset(&a.preset, a.variant, a.model.kernel)?;
    for (dst, src) in [
        (&mut spec.c, &a.grid_c),
        (&mut spec.eta, &a.grid_eta),
        (&mut spec.p, &a.grid_p),
        (&mut spec.tau, &a.grid_tau),
        (&mut spec.eps, &a.grid_eps),
        (&mut spec.sigma, &a.grid_sigma),
    ] {
        if let Some(v) = src {
            *dst = v.clone();
        }
    }
    let plan = stratified_kfold(&d, a.folds, seed)?;
    let result = grid_search(&d, &spec, &plan, &base)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    write_grid_files(&a.out, a.jsonl.as_deref(), d.source_id(), &result)?;
    let best = result.best_row();
    println!(
        "best of {} points: C={} eta={} p={} tau={} eps={} sigma={} acc {:.4} f1 {:.4}",
        result.rows.len(),
        best.point.c,
        best.point.eta,
        best.point.p,
        best.point.tau,
        best.point.eps,
        best.point.sigma.map_or("-".to_string(), |s| s.to_string()),
        best.cv.mean_acc,
        best.cv.mean_f1
    );
    Ok(ExitCode::SUCCESS)
}

fn bench(a: BenchArgs) -> Result<ExitCode, Error> {
    let cfg = BenchConfig::load(&a.protocol)?;
    let base_dir = a.protocol.parent().unwrap_or(Path::new("."));
    let out = run_bench(&cfg, base_dir, &a.out, Some(&timestamp()))?;
    println!("{} cells evaluated, {} files written to {}", out.rows.len(), out.files.len(), a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn synth(a: SynthArgs, seed: u64) -> Result<ExitCode, Error> {
    let hp = a.model.hyper()?;
    if a.resolution < 2 {
        return Err(Error::InvalidParameter("resolution must be at least 2".into()));
    }
    let spec = SynthSpec { n: a.n, seed, ..SynthSpec::default() };
    let clean = gen_gaussian_2class(&spec)?;
    let case1 = inject_outliers(&clean, &spec, OutlierTarget::Negative, a.outliers, seed.wrapping_add(1))?;
    let case2 = inject_outliers(&clean, &spec, OutlierTarget::Both, a.outliers, seed.wrapping_add(2))?;
    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    for (name, d) in [("clean", &clean), ("case1", &case1), ("case2", &case2)] {
        write_csv(d, &a.out.join(format!("{name}.csv")))?;
        let models = a
            .variants
            .iter()
            .map(|&v| fit(d, v, &hp).map(|m| (v, m)))
            .collect::<Result<Vec<_>, _>>()?;
        for (v, m) in &models {
            if let Some((w, _)) = m.linear_weights() {
                println!("{name} {v}: boundary angle to x1 + x2 = 0 is {:.4} rad", boundary_angle(&w));
            }
        }
        let lattice = bounding_lattice(d, a.resolution, a.padding);
        let values = models
            .iter()
            .map(|(_, m)| m.decision_values(&lattice))
            .collect::<Result<Vec<_>, _>>()?;
        let path = a.out.join(format!("boundary_{name}.csv"));
        let mut w = create(&path)?;
        let write = |w: &mut BufWriter<fs::File>| -> std::io::Result<()> {
            write!(w, "x1,x2,ref_x1_minus_x2,ref_x1_plus_x2")?;
            for (v, _) in &models {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
            for (i, row) in lattice.rows().into_iter().enumerate() {
                let x = [row[0], row[1]];
                write!(w, "{},{},{},{}", x[0], x[1], bayes_margin(&x), true_bayes_margin(&x))?;
                for col in &values {
                    write!(w, ",{}", col[i])?;
                }
                writeln!(w)?;
            }
            w.flush()
        };
        write(&mut w).map_err(io_err(&path))?;
    }
    println!("wrote clean, case1 and case2 datasets and boundary lattices to {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

/// Regular `res x res` lattice over the padded bounding box of the first two features.
fn bounding_lattice(d: &Dataset, res: usize, padding: f64) -> Array2<f64> {
    let mut bounds = [(f64::INFINITY, f64::NEG_INFINITY); 2];
    for row in d.samples().rows() {
        for (j, b) in bounds.iter_mut().enumerate() {
            b.0 = b.0.min(row[j]);
            b.1 = b.1.max(row[j]);
        }
    }
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .map(|&(lo, hi)| {
            let pad = (hi - lo) * padding;
            let (lo, hi) = (lo - pad, hi + pad);
            (0..res).map(|i| lo + (hi - lo) * i as f64 / (res - 1) as f64).collect()
        })
        .collect();
    Array2::from_shape_fn((res * res, 2), |(i, j)| if j == 0 { axes[0][i / res] } else { axes[1][i % res] })
}

fn stats(a: StatsArgs) -> Result<ExitCode, Error> {
    let m = ScoreMatrix::read_csv(&a.scores)?;
    let report = FriedmanReport::compute(&m.classifiers, &m.by_classifier(), !a.lower_is_better, a.alpha)?;
    let body = report.to_toml()?;
    let mut w = create(&a.out)?;
    write!(w, "# {}\n{body}", timestamp())
        .and_then(|_| w.flush())
        .map_err(io_err(&a.out))?;
    match report.ff {
        Some(ff) => println!("chi2_F = {:.4}, F_F = {ff:.4}, CD = {:.4}", report.chi2, report.cd),
        None => println!("chi2_F = {:.4}, F_F undefined, CD = {:.4}", report.chi2, report.cd),
    }
    Ok(ExitCode::SUCCESS)
}

fn verify_all(seed: u64) -> Result<ExitCode, Error> {
    let checks = verify::run_all(seed)?;
    let mut ok = true;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        ok &= c.passed;
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
