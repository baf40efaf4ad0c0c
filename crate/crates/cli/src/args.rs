//! Flag definitions. Every parameter can come from a `key=value` config
//! file instead (`--config`), with flags taking precedence, so all value
//! flags are optional here and resolved in `config`.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "blockq",
    version,
    about = "Stationary analysis of a two-stage batch-service blockchain queue",
    long_about = "Computes mean queue length, mean block content and mean transaction-\n\
                  confirmation time for a queue where transactions wait to be grabbed\n\
                  (up to a maximum block size) by an exponential block-generation stage\n\
                  and are then confirmed together by an exponential chain-building stage."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one parameter point; prints a JSON performance report.
    Solve(SolveArgs),
    /// Solve a parameter grid; prints CSV (one row per grid point).
    Sweep(SweepArgs),
    /// Run the discrete-event simulator once; prints a JSON estimate report.
    Simulate(SimulateArgs),
    /// Cross-check analytic, truncated-chain, simulated and (b=1)
    /// closed-form values; exit 3 on any tolerance breach.
    Validate(ValidateArgs),
}

/// Model parameters shared by every subcommand. The two service stages are
/// named by what they do: `--generate-rate` drains the queue into a block,
/// `--build-rate` confirms the block onto the chain.
#[derive(Debug, Args)]
pub struct ParamFlags {
    /// Poisson arrival rate of transactions.
    #[arg(long)]
    pub arrival_rate: Option<f64>,
    /// Exponential rate of the chain-building (confirmation) stage.
    #[arg(long)]
    pub build_rate: Option<f64>,
    /// Exponential rate of the block-generation stage.
    #[arg(long)]
    pub generate_rate: Option<f64>,
    /// Maximum transactions per block (b).
    #[arg(long)]
    pub block_size: Option<usize>,
    /// key=value file supplying defaults for any flag of this subcommand.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub params: ParamFlags,
    /// Successive-iterate stopping tolerance for the rate-matrix iteration.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Truncation threshold for the series form of the confirmation time.
    #[arg(long)]
    pub tail_eps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub params: ParamFlags,
    /// Which parameter to sweep: arrival_rate, build_rate, generate_rate
    /// or block_size.
    #[arg(long)]
    pub sweep_parameter: Option<String>,
    /// First swept value (inclusive).
    #[arg(long)]
    pub sweep_from: Option<f64>,
    /// Last swept value (inclusive, up to step rounding).
    #[arg(long)]
    pub sweep_to: Option<f64>,
    /// Grid step (> 0).
    #[arg(long)]
    pub sweep_step: Option<f64>,
    /// Explicit comma-separated value list; overrides from/to/step.
    #[arg(long)]
    pub sweep_values: Option<String>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub tail_eps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamFlags,
    /// PRNG seed; identical seeds replay identical runs.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Total confirmations to collect (warmup included).
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Confirmations discarded before measurement (default horizon/10).
    #[arg(long)]
    pub warmup: Option<u64>,
    /// Batch count for batch-means confidence intervals (>= 10).
    #[arg(long)]
    pub batches: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub params: ParamFlags,
    /// Queue-length cap for the truncated-chain oracle.
    #[arg(long)]
    pub level_cap: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub warmup: Option<u64>,
    #[arg(long)]
    pub batches: Option<u32>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub tail_eps: Option<f64>,
    /// Diagnostic mode: solve the rate-matrix equation with the uncorrected
    /// exponent and report why the result is inadmissible.
    #[arg(long)]
    pub paper_literal_r: bool,
}
