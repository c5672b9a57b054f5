//! `histocnn` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration
//! error, 3 I/O or data error.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use histocnn::acnn::{self, Activation, GradCheckOptions, Pooling, Topology, TrainingConfig};
use histocnn::eval::{self, AcnnMethod, ExperimentOptions, ExperimentReport, Method, SvmMethod};
use histocnn::imaging::{self, ClassLabel};
use histocnn::svm::{Grid, KernelSpec};
use histocnn::synth::{self, SyntheticSpec};
use histocnn::texfeat::{self, FeatureSet};
use histocnn::{par, Error, NUM_CLASSES};

use config::{ConfigError, ConfigFile};

const SEED_ENV: &str = "ACNN_SEED";

#[derive(Parser)]
#[command(name = "histocnn", version, about = "Patch-based histology image classification: adaptive CNN and texture+SVM pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic four-class dataset.
    Synth(SynthArgs),
    /// Cross-validate a classifier on a dataset and write reports.
    Run(Box<RunArgs>),
    /// Compare backpropagated gradients with finite differences.
    Gradcheck(GradcheckArgs),
    /// Dump texture descriptors of every patch as CSV.
    Features(FeaturesArgs),
    /// Show how per-patch score vectors are voted into an image label.
    VoteDemo(VoteArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    images_per_class: usize,
    #[arg(long, default_value_t = 640)]
    width: usize,
    #[arg(long, default_value_t = 480)]
    height: usize,
    /// Pixel noise standard deviation in gray levels.
    #[arg(long)]
    noise: Option<f64>,
    /// Seed (falls back to $ACNN_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodKind {
    Acnn,
    Svm,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelKind {
    Linear,
    Poly,
    Rbf,
}

fn parse_enum<T: ValueEnum>(s: &str) -> Result<T, String> {
    T::from_str(s, true)
}

#[derive(Args)]
struct RunArgs {
    /// Dataset root (one sub-directory per class).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory for reports and models.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key = value` configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<MethodKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    folds: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Single-threaded execution.
    #[arg(long)]
    deterministic: bool,
    /// Keep all images of a patient in the same fold (needs patients.csv).
    #[arg(long)]
    group_by_patient: bool,
    /// Do not write per-fold model files.
    #[arg(long)]
    no_models: bool,

    // adaptive CNN
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    min_train_error: Option<f64>,
    #[arg(long, value_parser = parse_enum::<ActivationArg>)]
    activation: Option<ActivationArg>,
    #[arg(long, value_parser = parse_enum::<PoolingArg>)]
    pooling: Option<PoolingArg>,
    #[arg(long)]
    kernel_size: Option<usize>,
    #[arg(long)]
    subsample: Option<usize>,
    /// Hidden CNN layer widths, e.g. `16,16,32`.
    #[arg(long)]
    cnn_layers: Option<Widths>,
    /// MLP layer widths including the 4-way output, e.g. `64,4`.
    #[arg(long)]
    mlp_layers: Option<Widths>,

    // texture + SVM
    /// Descriptor or `+`-joined descriptors, e.g. `rlpq` or `rlpq+rlbp`.
    #[arg(long)]
    feature: Option<String>,
    #[arg(long, value_enum)]
    kernel: Option<KernelKind>,
    /// Fixed SVM cost (disables the grid search unless --gamma is omitted for non-linear kernels).
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    coef0: Option<f64>,
    /// Skip the cost/gamma grid search and use --c/--gamma.
    #[arg(long)]
    no_grid: bool,
    #[arg(long)]
    inner_folds: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ActivationArg {
    Tanh,
    Sigmoid,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PoolingArg {
    Average,
    Max,
}

impl std::str::FromStr for MethodKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_enum(s)
    }
}
impl std::str::FromStr for KernelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_enum(s)
    }
}
impl std::str::FromStr for ActivationArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_enum(s)
    }
}
impl std::str::FromStr for PoolingArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_enum(s)
    }
}

#[derive(Clone, Debug)]
struct Widths(Vec<usize>);

impl std::str::FromStr for Widths {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad layer width `{p}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Widths)
    }
}

const RUN_KEYS: &[&str] = &[
    "data",
    "out",
    "method",
    "seed",
    "folds",
    "jobs",
    "deterministic",
    "group-by-patient",
    "no-models",
    "learning-rate",
    "max-iterations",
    "min-train-error",
    "activation",
    "pooling",
    "kernel-size",
    "subsample",
    "cnn-layers",
    "mlp-layers",
    "feature",
    "kernel",
    "c",
    "gamma",
    "degree",
    "coef0",
    "no-grid",
    "inner-folds",
];

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Parameters are drawn from U(-r, r).
    #[arg(long, default_value_t = 0.5)]
    init_range: f64,
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    #[arg(long, default_value_t = 1e-5)]
    tolerance: f64,
    /// Test hook: corrupt the first analytic gradient by this amount.
    #[arg(long, hide = true)]
    perturb: Option<f64>,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    data: PathBuf,
    /// Descriptor id (lbp, rlbp, urlbp, lpq, rlpq, haralick) or a `+`-joined set.
    #[arg(long)]
    descriptor: String,
    /// Output CSV file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VoteArgs {
    /// Patch score vectors as comma-separated values, e.g. `0.6,0.4,0,0`.
    scores: Vec<String>,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
    fn verification(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        use histocnn::acnn::AcnnError;
        use histocnn::svm::SvmError;
        use histocnn::texfeat::TexError;
        let code = match &e {
            Error::Acnn(AcnnError::Config(_) | AcnnError::Shape(_)) => 2,
            Error::Svm(SvmError::Parameter(_) | SvmError::EmptyGrid) => 2,
            Error::Texture(TexError::UnknownDescriptor(_) | TexError::Parameter(_)) => 2,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

macro_rules! impl_from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}
impl_from_core!(
    histocnn::imaging::ImagingError,
    histocnn::acnn::AcnnError,
    histocnn::svm::SvmError,
    histocnn::texfeat::TexError,
    histocnn::eval::EvalError
);

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: 3, message: format!("{}: {e}", path.display()) }
}

/// Flag, then config file, then `$ACNN_SEED`, then 0.
fn resolve_seed(flag: Option<u64>, cfg: &ConfigFile) -> Result<u64, Failure> {
    if let Some(s) = cfg.pick(flag, "seed")? {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|e| Failure::usage(format!("{SEED_ENV}=`{v}`: {e}"))),
        Err(_) => Ok(0),
    }
}

fn configure_threads(jobs: Option<usize>, deterministic: bool) -> Result<usize, Failure> {
    let jobs = if deterministic { Some(1) } else { jobs };
    if jobs == Some(0) {
        return Err(Failure::usage("--jobs must be at least 1"));
    }
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = jobs {
            // Ignore "already initialised" when called twice in one process.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(rayon::current_num_threads())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        Ok(1)
    }
}

fn cmd_synth(a: SynthArgs) -> Result<(), Failure> {
    let seed = resolve_seed(a.seed, &ConfigFile::default())?;
    let mut spec = SyntheticSpec { images_per_class: a.images_per_class, width: a.width, height: a.height, seed, ..SyntheticSpec::default() };
    if let Some(n) = a.noise {
        spec.noise = n;
    }
    let images = synth::generate(&spec)?;
    imaging::write_dataset(&a.out, &images)?;
    println!("wrote {} images ({} per class, seed {}) to {}", images.len(), spec.images_per_class, seed, a.out.display());
    Ok(())
}

fn build_topology(a: &RunArgs, cfg: &ConfigFile) -> Result<Topology, Failure> {
    let mut t = Topology::default();
    if let Some(w) = cfg.pick(a.cnn_layers.clone(), "cnn-layers")? {
        t.cnn_neurons = w.0;
    }
    if let Some(w) = cfg.pick(a.mlp_layers.clone(), "mlp-layers")? {
        t.mlp_neurons = w.0;
    }
    if let Some(k) = cfg.pick(a.kernel_size, "kernel-size")? {
        t.kernel_size = k;
    }
    if let Some(s) = cfg.pick(a.subsample, "subsample")? {
        t.subsample = s;
    }
    if let Some(act) = cfg.pick(a.activation, "activation")? {
        t.activation = match act {
            ActivationArg::Tanh => Activation::Tanh,
            ActivationArg::Sigmoid => Activation::Sigmoid,
        };
    }
    if let Some(p) = cfg.pick(a.pooling, "pooling")? {
        t.pooling = match p {
            PoolingArg::Average => Pooling::Average,
            PoolingArg::Max => Pooling::Max,
        };
    }
    if t.mlp_neurons.last() != Some(&NUM_CLASSES) {
        return Err(Failure::usage(format!("the last MLP layer must have {NUM_CLASSES} neurons")));
    }
    t.validate()?;
    Ok(t)
}

fn run_and_report<M: Method>(
    images: &[imaging::SourceImage],
    method: &M,
    plan: &eval::FoldPlan,
    out: &Path,
    save_models: bool,
    threads: usize,
) -> Result<ExperimentReport, Failure> {
    let opts = ExperimentOptions { model_dir: save_models.then(|| out.join("models")) };
    let report = eval::run_experiment(images, method, plan, &opts)?;
    let mut json: serde_json::Value = serde_json::from_str(&report.to_json()).expect("report is valid JSON");
    json["threads"] = serde_json::json!(threads);
    let path = out.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(&json).expect("serialisable")).map_err(|e| io_failure(&path, e))?;
    let path = out.join("summary.csv");
    fs::write(&path, format!("{}\n{}\n", ExperimentReport::CSV_HEADER, report.csv_row())).map_err(|e| io_failure(&path, e))?;
    Ok(report)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |x| format!("{x:.4}"))
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let cfg = match &a.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    cfg.reject_unknown(RUN_KEYS)?;
    let data: PathBuf = cfg.pick(a.data.clone(), "data")?.ok_or_else(|| Failure::usage("--data is required"))?;
    let out: PathBuf = cfg.pick(a.out.clone(), "out")?.ok_or_else(|| Failure::usage("--out is required"))?;
    let method = cfg.pick(a.method, "method")?.unwrap_or(MethodKind::Acnn);
    let seed = resolve_seed(a.seed, &cfg)?;
    let folds = cfg.pick(a.folds, "folds")?.unwrap_or(eval::DEFAULT_FOLDS);
    let deterministic = cfg.switch(a.deterministic, "deterministic")?;
    let group = cfg.switch(a.group_by_patient, "group-by-patient")?;
    let save_models = !cfg.switch(a.no_models, "no-models")?;
    let threads = configure_threads(cfg.pick(a.jobs, "jobs")?, deterministic)?;
    if folds < 2 {
        return Err(Failure::usage(format!("--folds must be at least 2, got {folds}")));
    }

    // Validate the method configuration before touching the dataset.
    enum Chosen {
        Acnn(AcnnMethod),
        Svm(SvmMethod),
    }
    let chosen = match method {
        MethodKind::Acnn => {
            let topology = build_topology(&a, &cfg)?;
            let d = TrainingConfig::default();
            let training = TrainingConfig {
                learning_rate: cfg.pick(a.learning_rate, "learning-rate")?.unwrap_or(d.learning_rate),
                max_iterations: cfg.pick(a.max_iterations, "max-iterations")?.unwrap_or(d.max_iterations),
                min_train_error: cfg.pick(a.min_train_error, "min-train-error")?.unwrap_or(d.min_train_error),
                seed,
                ..d
            };
            if !(training.learning_rate > 0.0) || training.max_iterations == 0 {
                return Err(Failure::usage("learning rate and iteration budget must be positive"));
            }
            Chosen::Acnn(AcnnMethod::new(topology, training))
        }
        MethodKind::Svm => {
            let feature = cfg.pick(a.feature.clone(), "feature")?.unwrap_or_else(|| "rlpq".into());
            let features: FeatureSet = feature.parse().map_err(|e: texfeat::TexError| Failure::usage(e.to_string()))?;
            let gamma = cfg.pick(a.gamma, "gamma")?;
            let kernel = match cfg.pick(a.kernel, "kernel")?.unwrap_or(KernelKind::Poly) {
                KernelKind::Linear => KernelSpec::Linear,
                KernelKind::Poly => KernelSpec::poly(
                    cfg.pick(a.degree, "degree")?.unwrap_or(KernelSpec::DEFAULT_DEGREE),
                    gamma.unwrap_or(1.0),
                    cfg.pick(a.coef0, "coef0")?.unwrap_or(0.0),
                ),
                KernelKind::Rbf => KernelSpec::rbf(gamma.unwrap_or(1.0)),
            };
            kernel.validate()?;
            let mut m = SvmMethod::new(features, kernel);
            m.seed = seed;
            m.inner_folds = cfg.pick(a.inner_folds, "inner-folds")?.unwrap_or(m.inner_folds);
            if cfg.switch(a.no_grid, "no-grid")? {
                m.grid = None;
                m.c = cfg.pick(a.c, "c")?.unwrap_or(1.0);
                if !(m.c > 0.0) {
                    return Err(Failure::usage("--c must be positive"));
                }
            } else if let Some(c) = cfg.pick(a.c, "c")? {
                // A fixed cost narrows the grid to that cost.
                let base = Grid::default();
                m.grid = Some(Grid { costs: vec![c], gammas: gamma.map_or(base.gammas, |g| vec![g]) });
            } else if let Some(g) = gamma {
                m.grid = Some(Grid { gammas: vec![g], ..Grid::default() });
            }
            Chosen::Svm(m)
        }
    };

    let images = imaging::load_dataset(&data)?;
    let plan = eval::make_folds(&images, folds, seed, group)?;
    fs::create_dir_all(&out).map_err(|e| io_failure(&out, e))?;
    let report = match &chosen {
        Chosen::Acnn(m) => run_and_report(&images, m, &plan, &out, save_models, threads)?,
        Chosen::Svm(m) => run_and_report(&images, m, &plan, &out, save_models, threads)?,
    };

    let d = &report.detection;
    println!("method: {}  images: {}  folds: {}  seed: {}", report.method, report.images, report.folds_k, report.seed);
    println!("identification accuracy (4-class): {}", fmt_opt(report.identification_accuracy));
    println!(
        "detection: acc {}  sen {}  spe {}  ppr {}  (TP {} TN {} FP {} FN {})",
        fmt_opt(d.accuracy),
        fmt_opt(d.sensitivity),
        fmt_opt(d.specificity),
        fmt_opt(d.precision),
        d.tp,
        d.tn,
        d.fp,
        d.fn_
    );
    println!("confusion (rows true, cols predicted; normal hp ta_lg ca):");
    for row in report.confusion4.counts {
        println!("  {:?}", row);
    }
    println!("{}", ExperimentReport::CSV_HEADER);
    println!("{}", report.csv_row());
    println!("reports written to {}", out.display());
    Ok(())
}

fn cmd_gradcheck(a: GradcheckArgs) -> Result<(), Failure> {
    let seed = resolve_seed(a.seed, &ConfigFile::default())?;
    let topology = Topology::small();
    let opts = GradCheckOptions { step: a.step, tolerance: a.tolerance, perturb: a.perturb };
    let report = acnn::check_random(&topology, seed, a.init_range, &opts)?;
    println!(
        "gradcheck seed {seed}: {} parameters, max relative error {:.3e} (parameter {}), tolerance {:.1e}: {}",
        report.parameters,
        report.max_relative_error,
        report.worst_parameter,
        report.tolerance,
        if report.passed { "PASS" } else { "FAIL" }
    );
    if report.passed {
        Ok(())
    } else {
        Err(Failure::verification("gradient check failed"))
    }
}

fn cmd_features(a: FeaturesArgs) -> Result<(), Failure> {
    let features: FeatureSet = a.descriptor.parse().map_err(|e: texfeat::TexError| Failure::usage(e.to_string()))?;
    let images = imaging::load_dataset(&a.data)?;
    let name = features.name();
    let rows: Vec<Vec<String>> = par::try_map_slice(&images, |im| -> Result<Vec<String>, Error> {
        imaging::expand(im)?
            .iter()
            .map(|p| {
                let v = features.extract(&imaging::to_grayscale(p))?;
                Ok(texfeat::csv_row(&im.image_id, &p.tag.to_string(), im.label.dir_name(), &name, &v.values))
            })
            .collect()
    })?;
    let width = rows.first().and_then(|r| r.first()).map_or(0, |r| r.split(',').count() - 4);
    let mut text = String::from("image_id,patch_tag,label,descriptor_id");
    for k in 0..width {
        text.push_str(&format!(",v{k}"));
    }
    text.push('\n');
    for r in rows.iter().flatten() {
        text.push_str(r);
        text.push('\n');
    }
    match a.out {
        Some(path) => {
            fs::write(&path, text).map_err(|e| io_failure(&path, e))?;
            eprintln!("wrote {} rows x {} values to {}", rows.iter().map(Vec::len).sum::<usize>(), width, path.display());
        }
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| io_failure(Path::new("<stdout>"), e))?,
    }
    Ok(())
}

fn cmd_vote_demo(a: VoteArgs) -> Result<(), Failure> {
    let raw = if a.scores.is_empty() { vec!["0.6,0.4,0,0".to_string(), "0.2,0.8,0,0".to_string()] } else { a.scores };
    let mut scores = Vec::with_capacity(raw.len());
    for s in &raw {
        let v: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| Failure::usage(format!("bad score `{p}`: {e}"))))
            .collect::<Result<_, _>>()?;
        let arr: [f64; NUM_CLASSES] =
            v.try_into().map_err(|v: Vec<f64>| Failure::usage(format!("expected {NUM_CLASSES} scores, got {}", v.len())))?;
        scores.push(arr);
    }
    let vote = eval::vote(&scores)?;
    for (s, r) in scores.iter().zip(&raw) {
        println!("patch {r:>20} -> argmax {}", ClassLabel::from_index(argmax(s)).unwrap());
    }
    println!("mean {:?}", vote.mean);
    println!("image label: {} (class {})", ClassLabel::from_index(vote.class).unwrap(), vote.class);
    Ok(())
}

fn argmax(v: &[f64]) -> usize {
    (1..v.len()).fold(0, |b, k| if v[k] > v[b] { k } else { b })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Run(a) => cmd_run(*a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::Features(a) => cmd_features(a),
        Command::VoteDemo(a) => cmd_vote_demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
