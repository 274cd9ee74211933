//! Command-line entry point: train, evaluate, benchmark, and synth
//! subcommands with reproducible configs and machine-readable reports.
//!
//! Machine output goes to stdout; progress and diagnostics go to stderr.
//! Exit codes: 0 success, 1 usage/config, 2 divergence, 3 I/O.

pub mod artifacts;
mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DIVERGENCE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Parser)]
#[command(name = "lfc", version, about = "Low-rank matrix completion with PID-adaptive regularization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a factor model and write factors, reports, and a run manifest
    Train(TrainArgs),
    /// Score saved factors against a dataset
    Evaluate(EvaluateArgs),
    /// Compare optimizers on identical data, split, and seed
    Benchmark(BenchmarkArgs),
    /// Generate a planted low-rank dataset
    Synth(SynthArgs),
}

/// Dataset selection and preprocessing flags shared by several subcommands.
#[derive(Args, Clone, Debug)]
struct DataArgs {
    /// Delimited triple file (row,col,value per line)
    #[arg(long)]
    data: Option<PathBuf>,
    /// JSON sidecar declaring m, n, delimiter; defaults to <data>.header.json
    #[arg(long)]
    header: Option<PathBuf>,
    /// Inline synthetic spec, e.g. m=100,n=50,rank=3,density=0.3,noise=0.01
    #[arg(long)]
    synth: Option<String>,
    /// Normalization mode: none, minmax, or zscore
    #[arg(long)]
    normalize: Option<String>,
    /// Train fraction of the train/test split
    #[arg(long)]
    split: Option<f64>,
    /// Seed for the split shuffle; defaults to --seed
    #[arg(long)]
    split_seed: Option<u64>,
}

/// Hyperparameter flags. Precedence: flags > --config file > --preset >
/// built-in defaults.
#[derive(Args, Clone, Debug)]
struct HyperArgs {
    /// lambda_opt, momentum, nesterov, adam, or nadam
    #[arg(long)]
    optimizer: Option<String>,
    /// Named hyperparameter preset: ukdale or iawe
    #[arg(long)]
    preset: Option<String>,
    /// JSON file with partial hyperparameter overrides
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    /// Fixed regularization for baselines; also sets default clip ceiling
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    kp: Option<f64>,
    #[arg(long)]
    ki: Option<f64>,
    #[arg(long)]
    kd: Option<f64>,
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Maximum training epochs
    #[arg(long)]
    epochs: Option<usize>,
    /// Convergence plateau threshold on validation RMSE
    #[arg(long)]
    eps: Option<f64>,
    /// Consecutive sub-eps epochs before stopping
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Visit entries in file order instead of a seeded shuffle
    #[arg(long)]
    no_shuffle: bool,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Replay a previous run from its manifest (other flags ignored)
    #[arg(long)]
    from_manifest: Option<PathBuf>,
    /// Output directory for factors, reports, and the manifest
    #[arg(long, default_value = "lfc-run")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// factors.json written by a train run
    #[arg(long)]
    factors: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Which part of the data to score: train, test, or all
    #[arg(long, default_value = "all")]
    side: String,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Comma-separated optimizer list; defaults to all five
    #[arg(long)]
    optimizers: Option<String>,
    /// Optional directory for the delimited table and per-run artifacts
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Synthetic spec, e.g. m=100,n=50,rank=3,density=0.3,noise=0.01
    #[arg(long)]
    synth: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for triples, truth matrix, and spec manifest
    #[arg(long)]
    out: PathBuf,
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Entry point usable from tests without spawning a process.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = err.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Train(args) => commands::cmd_train(&args),
        Command::Evaluate(args) => commands::cmd_evaluate(&args),
        Command::Benchmark(args) => commands::cmd_benchmark(&args),
        Command::Synth(args) => commands::cmd_synth(&args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        Error::Io(_) | Error::Serde(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}
