//! Command-line front end for the two-stage batch-service queue solver.
//!
//! Four subcommands: `solve` (one point, JSON), `sweep` (grid, CSV),
//! `simulate` (discrete-event run, JSON), `validate` (cross-check all
//! estimators, JSON). Exit codes: 0 success, 1 solver error, 2 unstable
//! input, 3 validation tolerance breach, 64 usage error.

pub mod args;
pub mod commands;
pub mod config;
pub mod report;
pub mod sweep;
pub mod validate;

use clap::error::ErrorKind;
use clap::Parser;

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_SOLVER_ERROR: i32 = 1;
pub const EXIT_UNSTABLE: i32 = 2;
pub const EXIT_BREACH: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Non-fatal outcome a command can end with; ordered so `max` keeps the
/// worst one seen across grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExitSignal {
    Success,
    Breach,
    Unstable,
    SolverError,
}

impl ExitSignal {
    pub fn code(self) -> i32 {
        match self {
            ExitSignal::Success => EXIT_SUCCESS,
            ExitSignal::Breach => EXIT_BREACH,
            ExitSignal::Unstable => EXIT_UNSTABLE,
            ExitSignal::SolverError => EXIT_SOLVER_ERROR,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config file, invalid parameters: exit 64.
    Usage(String),
    /// The solver or an oracle failed on otherwise-valid input: exit 1.
    Solver(String),
    /// Input is unstable where a stationary law is required: exit 2.
    Unstable,
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Solver(_) => EXIT_SOLVER_ERROR,
            CliError::Unstable => EXIT_UNSTABLE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Solver(msg) => write!(f, "solver error: {msg}"),
            CliError::Unstable => write!(
                f,
                "parameters are unstable (service cannot keep up with arrivals); \
                 run `solve` to see the drift numbers"
            ),
        }
    }
}

/// Parses arguments and runs the chosen command; returns the process exit
/// code. Clap's own exit conventions are overridden: help/version are
/// success, anything else it rejects is a usage error (64, not clap's 2 —
/// 2 means "unstable" here).
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return EXIT_SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return EXIT_USAGE;
        }
    };

    let outcome = match &cli.command {
        args::Command::Solve(a) => commands::cmd_solve(a),
        args::Command::Sweep(a) => commands::cmd_sweep(a),
        args::Command::Simulate(a) => commands::cmd_simulate(a),
        args::Command::Validate(a) => commands::cmd_validate(a),
    };
    match outcome {
        Ok(signal) => signal.code(),
        Err(e) => {
            eprintln!("{e}");
            e.code()
        }
    }
}
