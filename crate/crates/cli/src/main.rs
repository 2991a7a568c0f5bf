//! `arff`: data generation, training runs, experiment sweeps and reports.

mod commands;
mod overrides;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use arff_core::lsq::Activation;
use arff_core::Error;

#[derive(Parser)]
#[command(name = "arff", version, about = "Adaptive random Fourier features")]
struct Cli {
    /// Only print warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the sine-integral target and write a dataset file.
    GenData(GenDataArgs),
    /// One ARFF training run.
    Train(TrainArgs),
    /// Run a configured experiment (Tests 1 to 5, or any kind via --kind).
    Sweep(SweepArgs),
    /// Recompute aggregate statistics from per-run traces.
    Stats(StatsArgs),
    /// Kernel density estimate of sampled frequencies or a CSV column.
    Kde(KdeArgs),
    /// Compare Adam, ARFF pretraining followed by Adam, and ARFF alone.
    PretrainAdam(PretrainArgs),
    /// Coordinate-MLP image regression with and without an ARFF layer.
    Image(ImageArgs),
    /// Summarize an experiment directory as Markdown.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RotationArg {
    Paper,
    Identity,
}

impl RotationArg {
    fn name(self) -> &'static str {
        match self {
            RotationArg::Paper => "paper",
            RotationArg::Identity => "identity",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ActivationArg {
    ComplexExp,
    CosineBias,
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::ComplexExp => Activation::ComplexExp,
            ActivationArg::CosineBias => Activation::CosineBias,
        }
    }
}

impl ActivationArg {
    fn name(self) -> &'static str {
        match self {
            ActivationArg::ComplexExp => "complex_exp",
            ActivationArg::CosineBias => "cosine_bias",
        }
    }
}

#[derive(Args)]
struct TargetArgs {
    /// Width α of the regularized discontinuity.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum, default_value = "paper")]
    rotation: RotationArg,
}

#[derive(Args)]
struct GenDataArgs {
    /// Output file; `.csv` gives CSV, anything else the binary format.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    points: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    realization: u64,
    #[command(flatten)]
    target: TargetArgs,
    /// Standardize inputs and outputs before writing.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Training data written by `gen-data`; generated from the target when
    /// absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Held-out data; generated alongside when `--data` is absent.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Generated training points (default K²).
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    test_points: usize,
    #[command(flatten)]
    target: TargetArgs,
    /// Number of frequencies K.
    #[arg(long, short, default_value_t = 64)]
    k: usize,
    /// Iterations N.
    #[arg(long, short = 'n', default_value_t = 1000)]
    iterations: usize,
    /// Proposal step δ.
    #[arg(long, default_value_t = 0.5)]
    step: f64,
    /// Acceptance exponent γ.
    #[arg(long, default_value_t = 10.0)]
    gamma: f64,
    /// Batch size M_B (default: all training points).
    #[arg(long)]
    batch_size: Option<usize>,
    /// Tikhonov weight λ.
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// am, am-r, rw-r or am-r1.
    #[arg(long, default_value = "am-r")]
    variant: String,
    /// Constant resampling threshold R, overriding the variant.
    #[arg(long)]
    resample: Option<f64>,
    /// Constant Metropolis switch A, overriding the variant.
    #[arg(long)]
    metropolis: Option<bool>,
    #[arg(long, value_enum, default_value = "complex-exp")]
    activation: ActivationArg,
    /// Standard deviation of the initial frequencies (0: all zero).
    #[arg(long, default_value_t = 0.0)]
    init_std: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

/// Options shared by every experiment-running subcommand.
#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment config; flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Start from the published parameter tables instead of desk scale.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Any config field as `key=value` (TOML syntax; dotted keys for
    /// sections, e.g. `image.epochs=50`).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the resolved config and exit.
    #[arg(long)]
    dry_run: bool,
    /// Output directory.
    #[arg(long, short, required_unless_present = "dry_run")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// test1_stats, test2_fulldata, test3_gamma, test4_batch, test5_init,
    /// test6_pretrain or image_pipeline.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    /// Step δ per K (default: the published table extended by −0.25 per
    /// doubling).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    deltas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
    /// Batch sizes: a number, `full`, `m^(3/4)` or `cap:N`.
    #[arg(long, value_delimiter = ',')]
    batches: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    init_stds: Option<Vec<f64>>,
    #[arg(long, short = 'n')]
    iterations: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Training points per realization (default K²).
    #[arg(long)]
    train_points: Option<usize>,
    #[arg(long)]
    test_points: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    rotation: Option<RotationArg>,
    #[arg(long, value_enum)]
    activation: Option<ActivationArg>,
    /// Iterations whose frequencies are kept for density estimates.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    kde_axes: Option<Vec<usize>>,
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Args)]
struct StatsArgs {
    /// Experiment directory containing `index.csv`.
    #[arg(long, short)]
    dir: PathBuf,
    /// Compare with the directory's `aggregate.csv`; fail above 1e-12.
    #[arg(long)]
    check: bool,
    /// Write the recomputed table here.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false)]
struct KdeSource {
    /// Shallow model file; samples are `[B⁻¹ω]_axis`.
    #[arg(long, group = "source")]
    model: Option<PathBuf>,
    /// CSV file with a header row.
    #[arg(long, group = "source", requires = "column")]
    samples: Option<PathBuf>,
}

#[derive(Args)]
struct KdeArgs {
    #[command(flatten)]
    source: KdeSource,
    /// Column of `--samples` to use.
    #[arg(long)]
    column: Option<String>,
    #[arg(long, default_value_t = 0)]
    axis: usize,
    #[command(flatten)]
    target: TargetArgs,
    /// Kernel bandwidth (default: Silverman's rule).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Uniform grid `min,max,points` (default: the sample range plus four
    /// bandwidths, 512 points).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    grid: Option<Vec<f64>>,
    /// Output CSV (default: standard output).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PretrainArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    pretrain_iterations: Option<usize>,
    #[arg(long)]
    arff_iterations: Option<usize>,
    /// Keep the ARFF-trained first layer fixed during Adam.
    #[arg(long)]
    freeze_first_layer: bool,
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Args)]
struct ImageArgs {
    /// PNG files; a synthetic striped image is used when none are given.
    #[arg(long = "image")]
    images: Vec<PathBuf>,
    #[arg(long)]
    crop: Option<usize>,
    #[arg(long)]
    synthetic_size: Option<usize>,
    /// Approach numbers 1 to 4.
    #[arg(long, value_delimiter = ',')]
    approaches: Option<Vec<u8>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    /// Skip writing reconstructed images.
    #[arg(long)]
    no_render: bool,
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, short)]
    dir: PathBuf,
    /// Write the report here as well as to standard output.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Maps to the process exit code: 2 for invalid input, 1 otherwise.
#[derive(Debug)]
enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(m) => Failure::Invalid(m),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn report_failure(code: u8, kind: &str, message: &str) -> ExitCode {
    let json = serde_json::json!({ "error": kind, "message": message, "exit_code": code });
    eprintln!("{json}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report_failure(2, "invalid_config", e.render().to_string().trim()),
    };
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let result = match cli.command {
        Command::GenData(a) => commands::gen_data(&a),
        Command::Train(a) => commands::train(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Stats(a) => commands::stats(&a),
        Command::Kde(a) => commands::kde(&a),
        Command::PretrainAdam(a) => commands::pretrain(&a),
        Command::Image(a) => commands::image(&a),
        Command::Report(a) => report::report(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => report_failure(2, "invalid_config", &m),
        Err(Failure::Runtime(m)) => report_failure(1, "runtime", &m),
    }
}
