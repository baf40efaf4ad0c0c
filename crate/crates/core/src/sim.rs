//! Discrete-event simulation of the two-stage queue.
//!
//! Competing exponential clocks: arrivals always tick at `arrival_rate`;
//! the generation clock (`generate_rate`) runs only while the block is
//! empty and the queue is not; the building clock (`build_rate`) runs only
//! while the block holds transactions. Generation moves the `min(queue, b)`
//! oldest transactions into the block, building confirms the whole block at
//! once. Arrivals never join an in-progress block — the block's content is
//! frozen at generation time, which is exactly what the analytic generator
//! assumes.
//!
//! Output analysis is plain batch means: the first `warmup_events`
//! confirmations are discarded, the rest are split into `batch_count`
//! equal batches (remainder dropped), and 95% confidence half-widths come
//! from the Student-t quantile over the batch means. Queue and block
//! occupancy are time integrals over each batch's wall-clock span rather
//! than per-confirmation samples.

use crate::model::{stability, QueueParameters};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SimConfigError {
    #[error("warmup_events {warmup_events} must be smaller than horizon_events {horizon_events}")]
    WarmupTooLarge { warmup_events: u64, horizon_events: u64 },
    #[error("batch_count {got} is below the minimum of 10")]
    BatchCountTooSmall { got: u32 },
    #[error("only {measured} post-warmup confirmations for {batch_count} batches; need at least one per batch")]
    WindowTooSmall { measured: u64, batch_count: u32 },
}

/// Run recipe for one simulation. `horizon_events` counts *total*
/// confirmed transactions (warmup included); the measured window is what
/// remains after warmup, trimmed so `batch_count` divides it evenly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub params: QueueParameters,
    pub seed: u64,
    pub horizon_events: u64,
    pub warmup_events: u64,
    pub batch_count: u32,
}

impl SimConfig {
    /// Defaults: 10% of the horizon as warmup, 32 batches.
    pub fn new(params: QueueParameters, seed: u64, horizon_events: u64) -> SimConfig {
        SimConfig {
            params,
            seed,
            horizon_events,
            warmup_events: horizon_events / 10,
            batch_count: 32,
        }
    }

    pub fn validate(&self) -> Result<(), SimConfigError> {
        if self.warmup_events >= self.horizon_events {
            return Err(SimConfigError::WarmupTooLarge {
                warmup_events: self.warmup_events,
                horizon_events: self.horizon_events,
            });
        }
        if self.batch_count < 10 {
            return Err(SimConfigError::BatchCountTooSmall { got: self.batch_count });
        }
        let measured = self.horizon_events - self.warmup_events;
        if measured < u64::from(self.batch_count) {
            return Err(SimConfigError::WindowTooSmall {
                measured,
                batch_count: self.batch_count,
            });
        }
        Ok(())
    }
}

/// Point estimates with 95% batch-means half-widths, plus enough metadata
/// to audit the run: the seed, exact transaction counts for conservation
/// checks, and flags for the two ways a run can be statistically hollow
/// (unstable parameters, zero batch variance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationResult {
    pub est_queue: f64,
    pub half_width_queue: f64,
    pub est_block: f64,
    pub half_width_block: f64,
    pub est_confirmation: f64,
    pub half_width_confirmation: f64,
    /// Confirmations actually measured: horizon − warmup − batch remainder.
    pub confirmed_count: u64,
    pub seed_used: u64,
    /// Every arrival over the whole run (warmup and measurement alike).
    pub arrived_count: u64,
    /// Every confirmation over the whole run.
    pub total_confirmed: u64,
    pub final_queue_len: u64,
    pub final_block_content: u64,
    pub unstable: bool,
    pub degenerate_variance: bool,
}

fn batch_stats(samples: &[f64]) -> (f64, f64, bool) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 || !var.is_finite() {
        return (mean, 0.0, true);
    }
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .expect("batch_count >= 10 gives valid degrees of freedom")
        .inverse_cdf(0.975);
    (mean, t * (var / n).sqrt(), false)
}

pub fn simulate(config: &SimConfig) -> SimulationResult {
    config.validate().expect("SimConfig must be validated before simulate");
    let params = &config.params;
    let (lambda, mu1, mu2) =
        (params.arrival_rate, params.build_rate, params.generate_rate);
    let b = params.max_block_size;
    let unstable = !stability(params).is_stable;

    let batch_count = u64::from(config.batch_count);
    let batch_size = (config.horizon_events - config.warmup_events) / batch_count;
    let measured_target = batch_size * batch_count;

    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut now = 0.0_f64;
    // Arrival timestamps, oldest first; the block keeps timestamps too so
    // each confirmed transaction lands in the right batch.
    let mut queue: VecDeque<f64> = VecDeque::new();
    let mut block: VecDeque<f64> = VecDeque::new();

    let mut arrived: u64 = 0;
    let mut confirmed_total: u64 = 0;
    let mut measured: u64 = 0;

    // Running time integrals of queue length and block content, counted
    // only inside the measurement window.
    let mut j_integral = 0.0;
    let mut i_integral = 0.0;
    let mut window_open = config.warmup_events == 0;
    let mut batch_started_at = 0.0;
    let mut j_at_batch_start = 0.0;
    let mut i_at_batch_start = 0.0;
    let mut sojourn_sum = 0.0;
    let mut in_batch: u64 = 0;

    let mut queue_means = Vec::with_capacity(batch_count as usize);
    let mut block_means = Vec::with_capacity(batch_count as usize);
    let mut sojourn_means = Vec::with_capacity(batch_count as usize);

    while measured < measured_target {
        let generation_active = block.is_empty() && !queue.is_empty();
        let building_active = !block.is_empty();
        let total_rate = lambda
            + if generation_active { mu2 } else { 0.0 }
            + if building_active { mu1 } else { 0.0 };

        let u: f64 = rng.random();
        let dt = -(1.0 - u).ln() / total_rate;
        if window_open {
            j_integral += queue.len() as f64 * dt;
            i_integral += block.len() as f64 * dt;
        }
        now += dt;

        // Fixed selection order — arrival, generation, building — so a
        // given seed replays the identical trajectory.
        let pick: f64 = rng.random::<f64>() * total_rate;
        if pick < lambda {
            queue.push_back(now);
            arrived += 1;
        } else if generation_active && pick < lambda + mu2 {
            for _ in 0..b.min(queue.len()) {
                block.push_back(queue.pop_front().expect("generation needs a nonempty queue"));
            }
        } else {
            debug_assert!(building_active);
            while let Some(arrived_at) = block.pop_front() {
                confirmed_total += 1;
                if confirmed_total == config.warmup_events {
                    // Warmup ends here; measurement clocks start at this
                    // instant (the rest of this block counts as measured).
                    window_open = true;
                    batch_started_at = now;
                }
                if confirmed_total > config.warmup_events && measured < measured_target {
                    measured += 1;
                    sojourn_sum += now - arrived_at;
                    in_batch += 1;
                    if in_batch == batch_size {
                        let span = now - batch_started_at;
                        // A zero span would need a whole batch confirmed in
                        // one instant (batch_size <= b and an empty span);
                        // fall back to 0 rather than divide by it.
                        let scale = if span > 0.0 { 1.0 / span } else { 0.0 };
                        queue_means.push((j_integral - j_at_batch_start) * scale);
                        block_means.push((i_integral - i_at_batch_start) * scale);
                        sojourn_means.push(sojourn_sum / batch_size as f64);
                        batch_started_at = now;
                        j_at_batch_start = j_integral;
                        i_at_batch_start = i_integral;
                        sojourn_sum = 0.0;
                        in_batch = 0;
                    }
                }
            }
        }
    }

    let (est_queue, half_width_queue, degenerate_q) = batch_stats(&queue_means);
    let (est_block, half_width_block, degenerate_i) = batch_stats(&block_means);
    let (est_confirmation, half_width_confirmation, degenerate_t) = batch_stats(&sojourn_means);

    SimulationResult {
        est_queue,
        half_width_queue,
        est_block,
        half_width_block,
        est_confirmation,
        half_width_confirmation,
        confirmed_count: measured,
        seed_used: config.seed,
        arrived_count: arrived,
        total_confirmed: confirmed_total,
        final_queue_len: queue.len() as u64,
        final_block_content: block.len() as u64,
        unstable,
        degenerate_variance: degenerate_q || degenerate_i || degenerate_t,
    }
}
