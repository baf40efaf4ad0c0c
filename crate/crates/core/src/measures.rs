//! Stationary performance measures of a solved queue: mean queue length,
//! mean in-progress block content, and mean transaction-confirmation time —
//! the last by two independent routes (a closed form and a level-by-level
//! series) whose agreement is itself a correctness check.
//!
//! Confirmation time is the sojourn from a transaction's arrival until the
//! block containing it is appended: by the memoryless service stages, an
//! arrival that finds queue length `j = k*b + l` and block content `i`
//! waits out `k + 1` full generate-plus-build cycles, plus the residual
//! build of the current block when `i >= 1`. Summing against the
//! stationary law (arrivals see time averages) gives the series; the
//! closed form resums it through `(I-R)^{-1}` and `(I-R^b)^{-1}`.

use crate::matgeom::MatGeomSolution;
use crate::model::{stability, QueueParameters, StabilityReport};

/// All measures for one parameter point, with solver diagnostics folded in.
#[derive(Debug, Clone)]
pub struct PerformanceReport {
    /// E[J], mean number of transactions waiting in the queue.
    pub mean_queue: f64,
    /// E[I], mean number of transactions in the in-progress block; in `[0, b]`.
    pub mean_block: f64,
    /// E[T] via the resummed closed form.
    pub mean_confirmation_closed: f64,
    /// E[T] via the truncated level series.
    pub mean_confirmation_series: f64,
    /// |E[J] + E[I] - lambda * E[T]| — vanishes by Little's law.
    pub littles_residual: f64,
    /// Number of `b`-level groups summed for the series.
    pub series_truncation_k: usize,
    /// Geometric bound on the series mass left out by truncation.
    pub series_tail_bound: f64,
    /// Residual-build term of the closed form (diagnostic).
    pub closed_first_term: f64,
    /// Full-cycles term of the closed form (diagnostic).
    pub closed_second_term: f64,
    pub stability: StabilityReport,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// E[J] = pi_0 R (I-R)^{-2} e.
pub fn mean_queue_length(solution: &MatGeomSolution) -> f64 {
    let n = solution.boundary_pi0().len();
    let t = solution.neumann_inv_sq().matvec(&vec![1.0; n]);
    let s = solution.rate_matrix().matvec(&t);
    dot(solution.boundary_pi0(), &s)
}

/// E[I] = pi_0 (I-R)^{-1} h with the block-content weights h = (0, 1, ..., b).
pub fn mean_block_content(solution: &MatGeomSolution) -> f64 {
    let n = solution.boundary_pi0().len();
    let h: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let y = solution.neumann_inv().matvec(&h);
    dot(solution.boundary_pi0(), &y)
}

/// The two terms of the closed form
/// `E[T] = (1/mu1) [pi_0 (I-R)^{-1} e - <pi_0 (I-R)^{-1}>_0]
///         + (1/mu1 + 1/mu2) pi_0 (I-R^b)^{-1} (I-R)^{-1} e`,
/// where `<.>_0` is the first coordinate of the bracketed row vector.
pub fn confirmation_closed_terms(
    solution: &MatGeomSolution,
    params: &QueueParameters,
) -> (f64, f64) {
    debug_assert_eq!(params, solution.params());
    let mu1 = params.build_rate;
    let cycle = 1.0 / mu1 + 1.0 / params.generate_rate;
    let n = solution.boundary_pi0().len();

    // Residual build time, paid only when the tagged arrival finds the
    // block nonempty (hence the subtracted block-empty coordinate).
    let row = solution.neumann_inv().vecmat(solution.boundary_pi0());
    let first = (row.iter().sum::<f64>() - row[0]) / mu1;

    let y = solution.neumann_inv().matvec(&vec![1.0; n]);
    let w = solution.block_inv().matvec(&y);
    let second = cycle * dot(solution.boundary_pi0(), &w);
    (first, second)
}

/// E[T] by the closed form; see [`confirmation_closed_terms`].
pub fn mean_confirmation_time_closed(
    solution: &MatGeomSolution,
    params: &QueueParameters,
) -> f64 {
    let (first, second) = confirmation_closed_terms(solution, params);
    first + second
}

/// Truncated-series E[T] with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEstimate {
    pub value: f64,
    /// Index K of the last `b`-level group included (k = 0..=K).
    pub truncation_k: usize,
    /// Upper bound on the omitted tail, from geometric level-mass decay.
    pub tail_bound: f64,
}

/// Hard cap on series work; a stable solution decays geometrically long
/// before this, so hitting the cap only happens pathologically close to
/// the stability boundary. The estimate is then returned with its
/// (too-large) tail bound rather than panicking.
const MAX_SERIES_LEVELS: usize = 5_000_000;

/// E[T] as the level series
/// `sum_k sum_{l=0..b-1} [ (k+1)(1/mu1 + 1/mu2) m_{kb+l}
///                         + (1/mu1)(m_{kb+l} - pi_{0,kb+l}) ]`
/// where `m_j = pi_j e` is the level mass, truncated once a geometric
/// tail bound falls below `tail_eps`.
///
/// The bound anchors at the last included level's mass and uses the decay
/// ratio `q = max(sp(R), observed mass ratios in the last group)`: masses
/// `d` levels further out are bounded by `m q^d`, and the linear growth of
/// the cycle coefficient sums to the extra `1/(1-q)` factor.
pub fn mean_confirmation_time_series(
    solution: &MatGeomSolution,
    params: &QueueParameters,
    tail_eps: f64,
) -> SeriesEstimate {
    debug_assert_eq!(params, solution.params());
    assert!(tail_eps > 0.0, "tail_eps must be positive");
    let b = params.max_block_size;
    let mu1 = params.build_rate;
    let cycle = 1.0 / mu1 + 1.0 / params.generate_rate;
    let sp = solution.spectral_radius();

    let mut levels = solution.level_iter();
    let mut value = 0.0;
    let mut k = 0usize;
    let mut processed = 0usize;
    let mut prev_mass = f64::NAN;
    let mut ratio_max: f64 = 0.0;
    loop {
        let mut last_mass = 0.0;
        for _ in 0..b {
            let pi = levels.current();
            let mass: f64 = pi.iter().sum();
            value += (k as f64 + 1.0) * cycle * mass + (mass - pi[0]) / mu1;
            if prev_mass > 0.0 {
                ratio_max = ratio_max.max(mass / prev_mass);
            }
            prev_mass = mass;
            last_mass = mass;
            levels.advance();
            processed += 1;
        }
        let q = sp.max(ratio_max).min(1.0 - 1e-9);
        let geo = q / (1.0 - q);
        let tail_bound =
            last_mass * (((k as f64 + 2.0) * cycle + 1.0 / mu1) * geo + cycle / b as f64 * geo / (1.0 - q));
        if tail_bound < tail_eps || processed >= MAX_SERIES_LEVELS {
            return SeriesEstimate { value, truncation_k: k, tail_bound };
        }
        ratio_max = 0.0;
        k += 1;
    }
}

/// Assembles the full report for one solved point.
pub fn evaluate(solution: &MatGeomSolution, tail_eps: f64) -> PerformanceReport {
    let params = *solution.params();
    let mean_queue = mean_queue_length(solution);
    let mean_block = mean_block_content(solution);
    let (closed_first_term, closed_second_term) = confirmation_closed_terms(solution, &params);
    let mean_confirmation_closed = closed_first_term + closed_second_term;
    let series = mean_confirmation_time_series(solution, &params, tail_eps);
    let littles_residual =
        (mean_queue + mean_block - params.arrival_rate * mean_confirmation_closed).abs();
    PerformanceReport {
        mean_queue,
        mean_block,
        mean_confirmation_closed,
        mean_confirmation_series: series.value,
        littles_residual,
        series_truncation_k: series.truncation_k,
        series_tail_bound: series.tail_bound,
        closed_first_term,
        closed_second_term,
        stability: stability(&params),
    }
}
