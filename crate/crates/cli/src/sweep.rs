//! Parameter-grid sweeps with CSV output.
//!
//! Grid points are independent solves, so they run on a rayon pool
//! (`BLOCKQ_THREADS` sizes it); rows are collected and written in grid
//! order, making the byte stream a pure function of the spec.

use crate::{CliError, ExitSignal};
use blockq::matgeom::SolveError;
use blockq::model::stability;
use blockq::{measures, MatGeomSolution, QueueParameters, SolverOptions};
use rayon::prelude::*;
use std::io::Write;

pub const CSV_HEADER: &str = "swept_value,arrival_rate,build_rate,generate_rate,block_size,\
                              is_stable,EJ,EI,ET_closed,ET_series,littles_residual,\
                              spectral_radius,iterations,error";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParameter {
    ArrivalRate,
    BuildRate,
    GenerateRate,
    BlockSize,
}

impl SweptParameter {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "arrival_rate" => Ok(Self::ArrivalRate),
            "build_rate" => Ok(Self::BuildRate),
            "generate_rate" => Ok(Self::GenerateRate),
            // The model-side name for the block size is accepted as an
            // alias of the flag spelling.
            "block_size" | "max_block_size" => Ok(Self::BlockSize),
            other => Err(CliError::Usage(format!(
                "unknown sweep parameter {other:?}; expected arrival_rate, build_rate, \
                 generate_rate or block_size"
            ))),
        }
    }
}

/// A validated grid: the swept parameter, its values, and the fixed
/// remainder of the parameter set.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub swept: SweptParameter,
    pub values: Vec<f64>,
    pub points: Vec<QueueParameters>,
}

/// Fixed values for the non-swept parameters; the swept one may be left
/// out (its slot is filled from the grid).
#[derive(Debug, Clone, Copy)]
pub struct FixedParams {
    pub arrival_rate: Option<f64>,
    pub build_rate: Option<f64>,
    pub generate_rate: Option<f64>,
    pub block_size: Option<usize>,
}

impl SweepSpec {
    pub fn build(
        swept: SweptParameter,
        values: Vec<f64>,
        fixed: &FixedParams,
    ) -> Result<SweepSpec, CliError> {
        if values.is_empty() {
            return Err(CliError::Usage("sweep grid is empty".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Usage("sweep values must be strictly increasing".into()));
        }
        if swept == SweptParameter::BlockSize {
            for &v in &values {
                if v.fract() != 0.0 || v < 1.0 {
                    return Err(CliError::Usage(format!(
                        "block_size sweep values must be positive integers, got {v}"
                    )));
                }
            }
        }

        let need = |slot: Option<f64>, name: &str| {
            slot.ok_or_else(|| CliError::Usage(format!("missing required parameter --{name}")))
        };
        let mut points = Vec::with_capacity(values.len());
        for &v in &values {
            let (mut lambda, mut mu1, mut mu2) =
                (fixed.arrival_rate, fixed.build_rate, fixed.generate_rate);
            let mut b = fixed.block_size;
            match swept {
                SweptParameter::ArrivalRate => lambda = Some(v),
                SweptParameter::BuildRate => mu1 = Some(v),
                SweptParameter::GenerateRate => mu2 = Some(v),
                SweptParameter::BlockSize => b = Some(v as usize),
            }
            let b = match b {
                Some(b) => b,
                None => return Err(CliError::Usage("missing required parameter --block-size".into())),
            };
            let params = QueueParameters::new(
                need(lambda, "arrival-rate")?,
                need(mu1, "build-rate")?,
                need(mu2, "generate-rate")?,
                b,
            )
            .map_err(|e| CliError::Usage(format!("grid point {v}: {e}")))?;
            points.push(params);
        }
        Ok(SweepSpec { swept, values, points })
    }
}

/// Inclusive arithmetic grid. The count is rounded so an endpoint that is
/// within half a step of the grid (the usual float-accumulation case) is
/// kept.
pub fn arithmetic_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, CliError> {
    // Negated comparison so NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(step > 0.0) {
        return Err(CliError::Usage(format!("sweep step must be positive, got {step}")));
    }
    if to < from {
        return Err(CliError::Usage(format!("sweep range is empty: from {from} to {to}")));
    }
    let count = ((to - from) / step).round() as usize;
    Ok((0..=count).map(|i| from + i as f64 * step).collect())
}

pub fn parse_value_list(raw: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("sweep value {s:?} is not a number")))
        })
        .collect()
}

struct Row {
    value: f64,
    params: QueueParameters,
    body: Result<RowMeasures, RowFailure>,
}

struct RowMeasures {
    mean_queue: f64,
    mean_block: f64,
    confirmation_closed: f64,
    confirmation_series: f64,
    littles_residual: f64,
    spectral_radius: f64,
    iterations: usize,
}

enum RowFailure {
    Unstable(String),
    Solver(String),
}

fn solve_point(
    value: f64,
    params: &QueueParameters,
    options: &SolverOptions,
    tail_eps: f64,
) -> Row {
    let body = match MatGeomSolution::solve(params, options) {
        Ok(solution) => {
            let r = measures::evaluate(&solution, tail_eps);
            if r.littles_residual < 1e-8 {
                Ok(RowMeasures {
                    mean_queue: r.mean_queue,
                    mean_block: r.mean_block,
                    confirmation_closed: r.mean_confirmation_closed,
                    confirmation_series: r.mean_confirmation_series,
                    littles_residual: r.littles_residual,
                    spectral_radius: solution.spectral_radius(),
                    iterations: solution.iterations(),
                })
            } else {
                Err(RowFailure::Solver(format!(
                    "littles_residual {:e} exceeds 1e-8",
                    r.littles_residual
                )))
            }
        }
        Err(e @ SolveError::Unstable { .. }) => Err(RowFailure::Unstable(e.to_string())),
        Err(e) => Err(RowFailure::Solver(e.to_string())),
    };
    Row { value, params: *params, body }
}

/// Twelve significant digits, scientific; the byte-stability contract for
/// every float cell.
pub fn csv_float(x: f64) -> String {
    format!("{x:.11e}")
}

fn write_row(out: &mut dyn Write, spec: &SweepSpec, row: &Row) -> std::io::Result<()> {
    let p = &row.params;
    let swept = if spec.swept == SweptParameter::BlockSize {
        format!("{}", row.value as usize)
    } else {
        csv_float(row.value)
    };
    let prefix = format!(
        "{swept},{},{},{},{}",
        csv_float(p.arrival_rate),
        csv_float(p.build_rate),
        csv_float(p.generate_rate),
        p.max_block_size
    );
    match &row.body {
        Ok(m) => writeln!(
            out,
            "{prefix},true,{},{},{},{},{},{},{},",
            csv_float(m.mean_queue),
            csv_float(m.mean_block),
            csv_float(m.confirmation_closed),
            csv_float(m.confirmation_series),
            csv_float(m.littles_residual),
            csv_float(m.spectral_radius),
            m.iterations
        ),
        Err(failure) => {
            let (stable, message) = match failure {
                RowFailure::Unstable(msg) => (false, msg),
                RowFailure::Solver(msg) => (stability(p).is_stable, msg),
            };
            // Commas would shift the columns; the message is advisory text.
            let clean = message.replace(',', ";");
            writeln!(out, "{prefix},{stable},,,,,,,,{clean}")
        }
    }
}

/// Runs a sweep and writes CSV. The returned signal is the worst row
/// outcome: solver failures dominate instability, which dominates success.
pub fn run(
    spec: &SweepSpec,
    options: &SolverOptions,
    tail_eps: f64,
    out: &mut dyn Write,
) -> Result<ExitSignal, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("BLOCKQ_THREADS") {
        let n: usize = raw.parse().map_err(|_| {
            CliError::Usage(format!("BLOCKQ_THREADS must be a thread count, got {raw:?}"))
        })?;
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Solver(format!("cannot build thread pool: {e}")))?;

    let rows: Vec<Row> = pool.install(|| {
        spec.values
            .par_iter()
            .zip(&spec.points)
            .map(|(&value, params)| solve_point(value, params, options, tail_eps))
            .collect()
    });

    writeln!(out, "{CSV_HEADER}").map_err(|e| CliError::Solver(format!("write failed: {e}")))?;
    let mut signal = ExitSignal::Success;
    for row in &rows {
        write_row(out, spec, row).map_err(|e| CliError::Solver(format!("write failed: {e}")))?;
        match &row.body {
            Ok(_) => {}
            Err(RowFailure::Unstable(_)) => signal = signal.max(ExitSignal::Unstable),
            Err(RowFailure::Solver(_)) => signal = signal.max(ExitSignal::SolverError),
        }
    }
    Ok(signal)
}
