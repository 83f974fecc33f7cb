//! `ies`: subsampling, additive-model fitting and benchmarking from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{ArgAction, Args, Parser, Subcommand};
use ies_core::backfit::FitConfig;
use ies_core::bench::Case;
use ies_core::sampler::Method;
use ies_core::smooth::Kernel;

use crate::config::{resolve_seed, CliConfig};

#[derive(Debug, Parser)]
#[command(
    name = "ies",
    version,
    about = "Orthogonal-array guided subsampling and additive-model fitting",
    long_about = None,
    propagate_version = true
)]
struct Cli {
    /// RNG seed; falls back to IES_SEED, then the config file, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML file with `seed`, `threads` and `verbosity` defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    /// Log errors only.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an orthogonal array OA(λq², p, q, 2) and print it as CSV.
    OaGen(OaGenArgs),
    /// Evaluate the discrepancy criterion L of a design and its lower bounds.
    Criterion(CriterionArgs),
    /// Select a subsample of rows from a CSV file.
    Subsample(SubsampleArgs),
    /// Fit an additive model by local-linear backfitting.
    Fit(FitArgs),
    /// Run the simulation study or the real-data comparison.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
struct OaGenArgs {
    /// Number of levels (a supported prime power).
    #[arg(long)]
    q: u32,
    /// Number of columns (at most q + 1).
    #[arg(long)]
    p: usize,
    /// Copies of the q² base block.
    #[arg(long, default_value_t = 1)]
    lambda: usize,
    /// Emit points jittered uniformly within their cells instead of integer levels.
    #[arg(long)]
    jitter: bool,
    /// Output file (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CriterionArgs {
    #[arg(long)]
    input: PathBuf,
    /// Response column to exclude; every other column is a predictor.
    #[arg(long)]
    response: Option<String>,
    /// Input holds integer levels in 0..q rather than raw values.
    #[arg(long, requires = "q", conflicts_with = "unit")]
    levels: bool,
    /// Input values already lie in [0, 1]; skip min/max scaling.
    #[arg(long)]
    unit: bool,
    /// Number of levels (default: largest supported prime power ≤ ⌈√n⌉).
    #[arg(long)]
    q: Option<u32>,
    /// Newline-delimited 0-based row indices; only these rows are evaluated.
    #[arg(long)]
    indices: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SubsampleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    response: String,
    /// Predictor columns, comma separated (default: all but the response).
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    /// Subsample size.
    #[arg(long)]
    n: usize,
    /// Number of levels (default: largest supported prime power ≤ ⌈√n⌉).
    #[arg(long)]
    q: Option<u32>,
    #[arg(long, default_value = "ies")]
    method: Method,
    /// Selected rows as CSV (default: <input stem>.subsample.csv beside the input).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Selected 0-based row indices (default: <input stem>.subsample.idx beside the input).
    #[arg(long)]
    emit_indices: Option<PathBuf>,
    /// Record and re-check the per-step minimum scores (ies only).
    #[arg(long)]
    audit: bool,
}

#[derive(Debug, Args)]
pub(crate) struct FitFlags {
    /// Bandwidths on the [0, 1]-scaled axes, one per predictor, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "cv")]
    bandwidths: Option<Vec<f64>>,
    /// Choose bandwidths by k-fold cross-validation.
    #[arg(long)]
    cv: bool,
    #[arg(long, default_value_t = 5)]
    cv_folds: usize,
    /// Candidate grid `start:stop:step` used for every predictor.
    #[arg(long, default_value = "0.05:0.95:0.05")]
    cv_grid: String,
    /// Search every bandwidth combination instead of coordinate descent.
    #[arg(long)]
    full_grid: bool,
    #[arg(long, default_value = "epanechnikov")]
    kernel: Kernel,
    #[arg(long, default_value_t = FitConfig::default().max_iter)]
    max_iter: usize,
    #[arg(long, default_value_t = FitConfig::default().tol)]
    tol: f64,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    response: String,
    /// Predictor columns, comma separated (default: all but the response).
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    #[command(flatten)]
    fit: FitFlags,
    /// Component values per row as CSV (default: <input stem>.components.csv beside the input).
    #[arg(long)]
    components: Option<PathBuf>,
    /// Write the JSON summary here instead of stdout.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Also report ‖Sᵢ*Sⱼ*‖∞ for every predictor pair.
    #[arg(long)]
    diagnostics: bool,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// Simulation case: 1 (truncated normal) or 2 (copula with exponential marginals).
    #[arg(long, default_value = "1")]
    case: Case,
    /// Add the interaction term to the regression function.
    #[arg(long)]
    misspecify: bool,
    /// Full data size.
    #[arg(long = "N", default_value_t = 5000)]
    n_total: usize,
    /// Subsample size.
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// Number of levels (default: largest supported prime power ≤ ⌈√n⌉).
    #[arg(long)]
    q: Option<u32>,
    /// Predictor count of the simulated data; p ≠ 3 records uniformity metrics only.
    #[arg(long, default_value_t = 3)]
    p: usize,
    #[arg(long, default_value_t = 0.3)]
    rho: f64,
    #[arg(long, default_value_t = 0.25)]
    noise_var: f64,
    #[arg(long, value_delimiter = ',', default_value = "ies,rand")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 50)]
    reps: usize,
    /// Points per axis of the evaluation grid.
    #[arg(long, default_value_t = 40)]
    grid_per_axis: usize,
    /// Resolution of the bivariate CDF uniformity check.
    #[arg(long, default_value_t = 64)]
    cdf_grid: usize,
    /// JSON-lines report; `.summary.csv` and `.timing.jsonl` sidecars are written beside it.
    #[arg(long, default_value = "report.jsonl")]
    out: PathBuf,
    #[command(flatten)]
    fit: FitFlags,
    /// Use this CSV instead of simulated data.
    #[arg(long, requires = "response")]
    real_data: Option<PathBuf>,
    /// Response column of the real data.
    #[arg(long)]
    response: Option<String>,
    /// Predictor columns of the real data, comma separated (default: all but the response).
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    /// Real-data columns (predictors or response) replaced by their natural log.
    #[arg(long, value_delimiter = ',')]
    log_columns: Option<Vec<String>>,
}

/// How a run ended, mapped to the process exit code.
pub(crate) enum Failure {
    /// Bad invocation: exit 1.
    Usage(String),
    /// The command was valid but could not be carried out: exit 2.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<ies_core::Error> for Failure {
    fn from(e: ies_core::Error) -> Self {
        use ies_core::Error as E;
        match e {
            E::UnsupportedField { .. } | E::TooManyColumns { .. } | E::InvalidArgument(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.into()),
        }
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => CliConfig::load(path).map_err(|e| usage(format!("{e:#}")))?,
        None => CliConfig::default(),
    };
    let flags = CliConfig {
        seed: cli.seed,
        threads: cli.threads,
        verbosity: (cli.verbose > 0).then_some(cli.verbose),
    };
    let settings = file.merged(&flags);
    let env_seed = std::env::var("IES_SEED").ok();
    let seed = resolve_seed(cli.seed, env_seed.as_deref(), file.seed).map_err(usage)?;

    init_logging(if cli.quiet { None } else { Some(settings.verbosity.unwrap_or(0)) });
    if let Some(t) = settings.threads {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Runtime(e.into()))?;
    }
    if log::log_enabled!(log::Level::Debug) {
        let effective = CliConfig {
            seed: Some(seed),
            ..settings
        };
        log::debug!("effective settings:\n{}", effective.to_toml().unwrap_or_default());
    }

    match cli.command {
        Command::OaGen(a) => commands::oa_gen(&a, seed),
        Command::Criterion(a) => commands::criterion(&a),
        Command::Subsample(a) => commands::subsample(&a, seed),
        Command::Fit(a) => commands::fit(&a, seed),
        Command::Benchmark(a) => commands::benchmark(&a, seed),
    }
}

fn init_logging(verbosity: Option<u8>) {
    let level = match verbosity {
        None => "error",
        Some(0) => "warn",
        Some(1) => "info",
        Some(2) => "debug",
        Some(_) => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
}
