//! Independent ground truth for the analytic pipeline.
//!
//! Two oracles, both deliberately ignorant of the matrix-geometric
//! machinery:
//!
//! * [`truncated_measures`] — build the *full* generator up to a finite
//!   queue cap (arrivals suppressed at the cap, so rows stay conservative
//!   and the bias is one-sided), solve the stationary vector directly, and
//!   sum the measures state by state.
//! * [`mg1_erlang_oracle`] — for `b = 1` the model is a plain single-server
//!   queue whose service is one generation followed by one build (a
//!   two-stage Erlang-type time), so the classical mean-value formulas
//!   apply verbatim.

use crate::linalg::{self, DenseMatrix, LinalgError};
use crate::model::{stability, QueueParameters};
use thiserror::Error;

/// Largest state count the dense direct solve accepts. Bigger requests are
/// rejected outright instead of silently switching methods.
pub const MAX_TRUNCATED_STATES: usize = 2000;

/// The truncation must leave this little mass near the cap to be trusted.
pub const TAIL_MASS_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("truncated chain would have {states} states, above the cap of {cap}")]
    TooManyStates { states: usize, cap: usize },
    #[error("level_cap {level_cap} is too small; need at least max_block_size + 2 = {minimum}")]
    LevelCapTooSmall { level_cap: usize, minimum: usize },
    #[error("truncation tail mass {tail_mass:e} exceeds {threshold:e}; increase level_cap")]
    TailMassTooLarge { tail_mass: f64, threshold: f64 },
    #[error("parameters are unstable (utilization {utilization}); the oracle needs a stationary law")]
    Unstable { utilization: f64 },
    #[error("closed-form oracle only covers max_block_size = 1, got {got}")]
    WrongBlockSize { got: usize },
    #[error("closed-form oracle needs utilization below 1, got {rho}")]
    Saturated { rho: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Finite truncation of the generator: queue length capped at `level_cap`,
/// arrivals at the cap dropped.
#[derive(Debug, Clone)]
pub struct TruncatedModel {
    pub params: QueueParameters,
    pub level_cap: usize,
    pub generator: DenseMatrix,
}

/// State index: level-major, phase-minor.
fn state_index(phases: usize, i: usize, j: usize) -> usize {
    j * phases + i
}

pub fn build_truncated_model(
    params: &QueueParameters,
    level_cap: usize,
) -> Result<TruncatedModel, OracleError> {
    let b = params.max_block_size;
    let phases = params.phase_count();
    if level_cap < b + 2 {
        return Err(OracleError::LevelCapTooSmall { level_cap, minimum: b + 2 });
    }
    let states = phases * (level_cap + 1);
    if states > MAX_TRUNCATED_STATES {
        return Err(OracleError::TooManyStates { states, cap: MAX_TRUNCATED_STATES });
    }
    let (lambda, mu1, mu2) = (params.arrival_rate, params.build_rate, params.generate_rate);

    let mut q = DenseMatrix::zeros(states, states);
    for j in 0..=level_cap {
        for i in 0..phases {
            let s = state_index(phases, i, j);
            let mut outflow = 0.0;
            if j < level_cap {
                // Arrival; suppressed at the cap (loss truncation keeps
                // every row summing to zero).
                let t = state_index(phases, i, j + 1);
                q.set(s, t, q.get(s, t) + lambda);
                outflow += lambda;
            }
            if i == 0 && j >= 1 {
                // Generation grabs the min(j, b) oldest transactions.
                let take = j.min(b);
                let t = state_index(phases, take, j - take);
                q.set(s, t, q.get(s, t) + mu2);
                outflow += mu2;
            }
            if i >= 1 {
                // Building confirms the whole block.
                let t = state_index(phases, 0, j);
                q.set(s, t, q.get(s, t) + mu1);
                outflow += mu1;
            }
            q.set(s, s, q.get(s, s) - outflow);
        }
    }
    Ok(TruncatedModel { params: *params, level_cap, generator: q })
}

/// Measures from the direct stationary solve of a truncated chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedMeasures {
    pub mean_queue: f64,
    pub mean_block: f64,
    pub mean_confirmation: f64,
    /// Total stationary mass on levels `level_cap - b ..= level_cap`; the
    /// truncation is only trusted when this is below
    /// [`TAIL_MASS_THRESHOLD`]. Note this bounds the *mass* near the cap;
    /// level-weighted measures (mean queue, confirmation time) carry an
    /// extra factor of roughly the cap itself in their truncation bias.
    pub tail_mass: f64,
}

pub fn truncated_measures(
    params: &QueueParameters,
    level_cap: usize,
) -> Result<TruncatedMeasures, OracleError> {
    let report = stability(params);
    if !report.is_stable {
        return Err(OracleError::Unstable { utilization: report.utilization });
    }
    let model = build_truncated_model(params, level_cap)?;
    let pi = linalg::left_null_vector(&model.generator)?;

    let b = params.max_block_size;
    let phases = params.phase_count();
    let cycle = 1.0 / params.build_rate + 1.0 / params.generate_rate;
    let mut mean_queue = 0.0;
    let mut mean_block = 0.0;
    let mut mean_confirmation = 0.0;
    let mut tail_mass = 0.0;
    for j in 0..=level_cap {
        for i in 0..phases {
            let p = pi[state_index(phases, i, j)];
            mean_queue += j as f64 * p;
            mean_block += i as f64 * p;
            // An arrival seeing (i, j) waits out j/b (integer) further full
            // cycles beyond its own, plus the residual build if one is
            // running — the same case split the series formula uses.
            let mut coefficient = ((j / b) as f64 + 1.0) * cycle;
            if i >= 1 {
                coefficient += 1.0 / params.build_rate;
            }
            mean_confirmation += coefficient * p;
            if j + b >= level_cap {
                tail_mass += p;
            }
        }
    }
    // Negated so a NaN tail mass (degenerate solve) also lands here.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(tail_mass < TAIL_MASS_THRESHOLD) {
        return Err(OracleError::TailMassTooLarge {
            tail_mass,
            threshold: TAIL_MASS_THRESHOLD,
        });
    }
    Ok(TruncatedMeasures { mean_queue, mean_block, mean_confirmation, tail_mass })
}

/// Closed-form (E[J], E[I], E[T]) for `b = 1`.
///
/// With `b = 1` every block carries exactly one transaction, so the system
/// is a single-server queue with service time `S = S_generate + S_build`:
/// `E[T] = E[S] + lambda E[S^2] / (2 (1 - rho))` (mean-value formula for
/// Poisson arrivals), `E[I] = lambda/mu1` (fraction of time the build
/// stage works), and `E[J] = lambda E[T] - E[I]` by Little's law on the
/// queue alone.
pub fn mg1_erlang_oracle(params: &QueueParameters) -> Result<(f64, f64, f64), OracleError> {
    if params.max_block_size != 1 {
        return Err(OracleError::WrongBlockSize { got: params.max_block_size });
    }
    let (lambda, mu1, mu2) = (params.arrival_rate, params.build_rate, params.generate_rate);
    let mean_s = 1.0 / mu1 + 1.0 / mu2;
    let rho = lambda * mean_s;
    if rho >= 1.0 {
        return Err(OracleError::Saturated { rho });
    }
    let mean_s_sq = 2.0 / (mu1 * mu1) + 2.0 / (mu2 * mu2) + 2.0 / (mu1 * mu2);
    let mean_t = mean_s + lambda * mean_s_sq / (2.0 * (1.0 - rho));
    let mean_i = lambda / mu1;
    let mean_j = lambda * mean_t - mean_i;
    Ok((mean_j, mean_i, mean_t))
}
