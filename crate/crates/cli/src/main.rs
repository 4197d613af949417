//! `abxeval`: machine ABX scoring, human reweighting and probit comparison
//! of speech representations, driven by a TOML run file.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use abxeval::MetricKind;
use clap::{Parser, Subcommand};

pub const EXIT_DATA: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_MISMATCH: u8 = 3;

/// A fatal outcome with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn data(message: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_DATA,
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "abxeval", version, about = "ABX discrimination and human-response prediction for speech representations")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for triplet and resample parallelism (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Frame metric for every model: angular or kl.
    #[arg(long, global = true)]
    metric: Option<MetricKind>,
    /// Probability floor for the kl metric.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// File with one triplet id per line; restricts every command to those items.
    #[arg(long, global = true)]
    subset: Option<PathBuf>,
    #[arg(long, global = true)]
    n_resamples: Option<usize>,
    /// Confidence level of bootstrap intervals.
    #[arg(long, global = true)]
    ci: Option<f64>,
    /// Fit this model with one delta map for both languages (repeatable).
    #[arg(long = "shared-delta", value_name = "MODEL_ID", global = true)]
    shared_delta: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score every triplet with every model; writes deltas/<model>.<lang>.csv.
    Eval,
    /// Global, per-contrast and human-reweighted accuracies from delta files.
    Accuracy {
        /// Do not compute the reweighted report (no responses needed).
        #[arg(long)]
        skip_reweighted: bool,
    },
    /// Probit fits, paired bootstrap of log-likelihoods and figure tables.
    Fit,
    /// Dataset counts, checked against `[expected]` when configured.
    Validate,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let path = cli
        .config
        .ok_or_else(|| Failure::config("--config is required"))?;
    let flags = config::Overrides {
        out: cli.out,
        seed: cli.seed,
        workers: cli.workers,
        metric: cli.metric,
        epsilon: cli.epsilon,
        subset: cli.subset,
        n_resamples: cli.n_resamples,
        ci: cli.ci,
        shared_delta: cli.shared_delta,
    };
    let cfg = config::load(&path, &flags)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Failure::config(format!("cannot start {} workers: {e}", cfg.workers)))?;
    pool.install(|| match cli.command {
        Command::Eval => commands::eval(&cfg),
        Command::Accuracy { skip_reweighted } => commands::accuracy(&cfg, !skip_reweighted),
        Command::Fit => commands::fit(&cfg),
        Command::Validate => commands::validate(&cfg),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
