//! Model definition: validated queue parameters, the block structure of the
//! infinitesimal generator, the phase-process stationary vector, and the
//! mean-drift stability test.
//!
//! State space: `(i, j)` where `i` in `0..=b` is the number of transactions
//! in the in-progress block (the *phase*) and `j >= 0` is the queue length
//! (the *level*). Transitions:
//!
//! * arrival, rate `lambda`: `(i, j) -> (i, j+1)`;
//! * block generation, rate `mu2`, only from `(0, j)` with `j >= 1`:
//!   the `min(j, b)` oldest transactions move into the block;
//! * blockchain building, rate `mu1`, only from `(i, j)` with `i >= 1`:
//!   the block empties, confirming its contents: `(i, j) -> (0, j)`.
//!
//! Ordered by level, the generator is block-tridiagonal-like with an extra
//! sub-block `Ab` sitting `b` levels below the diagonal (a generation from
//! level `j > b` removes exactly `b` transactions at once).

use crate::linalg::DenseMatrix;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParameterError {
    #[error("{name} must be strictly positive and finite, got {value}")]
    InvalidRate { name: &'static str, value: f64 },
    #[error("max_block_size must be at least 1")]
    BlockSizeZero,
}

/// Validated model parameters.
///
/// Rates are per unit time: `arrival_rate` for the Poisson transaction
/// stream, `generate_rate` for the queue-consuming block-generation stage,
/// `build_rate` for the block-confirming chain-building stage.
/// `max_block_size` is the batch bound `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueParameters {
    pub arrival_rate: f64,
    pub build_rate: f64,
    pub generate_rate: f64,
    pub max_block_size: usize,
}

impl QueueParameters {
    pub fn new(
        arrival_rate: f64,
        build_rate: f64,
        generate_rate: f64,
        max_block_size: usize,
    ) -> Result<Self, ParameterError> {
        for (name, value) in [
            ("arrival_rate", arrival_rate),
            ("build_rate", build_rate),
            ("generate_rate", generate_rate),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ParameterError::InvalidRate { name, value });
            }
        }
        if max_block_size == 0 {
            return Err(ParameterError::BlockSizeZero);
        }
        Ok(Self { arrival_rate, build_rate, generate_rate, max_block_size })
    }

    /// Number of phases, `b + 1` (block content ranges over `0..=b`).
    pub fn phase_count(&self) -> usize {
        self.max_block_size + 1
    }
}

/// The `(b+1) x (b+1)` blocks of the generator.
///
/// * `a0 = lambda * I`: an arrival bumps the level, phase unchanged.
/// * `a1`: within-level transitions plus the diagonal of total outflow —
///   diagonal `(-(lambda+mu2), -(lambda+mu1), ...)`, column 0 entries `mu1`
///   in rows `1..=b` (building empties the block).
/// * `ab`: single entry `mu2` at `(0, b)` — generation from a level `> b`
///   takes a full batch of `b`, dropping the level by `b`.
/// * `boundary[k]` for `k = 0..=b`: the level-`k` row's block in column 0.
///   `boundary[0]` is `a1` with the top-left replaced by `-lambda` (no
///   generation when the queue is empty); `boundary[k]` for `k >= 1` has the
///   single entry `mu2` at `(0, k)` — generation takes all `k` queued
///   transactions straight to phase `k`, level 0.
#[derive(Debug, Clone)]
pub struct BlockMatrices {
    pub a0: DenseMatrix,
    pub a1: DenseMatrix,
    pub ab: DenseMatrix,
    pub boundary: Vec<DenseMatrix>,
}

pub fn build_block_matrices(params: &QueueParameters) -> BlockMatrices {
    let n = params.phase_count();
    let b = params.max_block_size;
    let (lambda, mu1, mu2) = (params.arrival_rate, params.build_rate, params.generate_rate);

    let mut a0 = DenseMatrix::zeros(n, n);
    for i in 0..n {
        a0.set(i, i, lambda);
    }

    let mut a1 = DenseMatrix::zeros(n, n);
    a1.set(0, 0, -(lambda + mu2));
    for i in 1..n {
        a1.set(i, i, -(lambda + mu1));
        a1.set(i, 0, mu1);
    }

    let mut ab = DenseMatrix::zeros(n, n);
    ab.set(0, b, mu2);

    let mut boundary = Vec::with_capacity(n);
    let mut b0 = a1.clone();
    b0.set(0, 0, -lambda);
    boundary.push(b0);
    for k in 1..=b {
        let mut bk = DenseMatrix::zeros(n, n);
        bk.set(0, k, mu2);
        boundary.push(bk);
    }

    BlockMatrices { a0, a1, ab, boundary }
}

/// Stationary vector of the phase process `A = a0 + a1 + ab`:
/// `theta = (mu1/(mu1+mu2), 0, ..., 0, mu2/(mu1+mu2))`.
///
/// The closed form is returned directly; `theta * A = 0` is re-verified
/// numerically, so a construction bug in the blocks panics here instead of
/// quietly corrupting the drift comparison downstream.
pub fn phase_stationary_theta(params: &QueueParameters) -> Vec<f64> {
    let n = params.phase_count();
    let (mu1, mu2) = (params.build_rate, params.generate_rate);
    let mut theta = vec![0.0; n];
    theta[0] = mu1 / (mu1 + mu2);
    theta[n - 1] = mu2 / (mu1 + mu2);

    let m = build_block_matrices(params);
    let mut residual: f64 = 0.0;
    for j in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            acc += theta[i] * (m.a0.get(i, j) + m.a1.get(i, j) + m.ab.get(i, j));
        }
        residual = residual.max(acc.abs());
    }
    let scale = (params.arrival_rate + mu1 + mu2).max(1.0);
    assert!(
        residual <= 1e-12 * scale,
        "phase generator self-check failed: |theta * A| = {residual:e}"
    );
    theta
}

/// Mean-drift stability report.
///
/// The process is positive recurrent iff the phase-averaged downward drift
/// `b * mu1 * mu2 / (mu1 + mu2)` strictly exceeds the arrival rate; equality
/// is reported as unstable (utilization exactly 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// Upward drift: the arrival rate `lambda`.
    pub drift_up: f64,
    /// Downward drift: `b * mu1 * mu2 / (mu1 + mu2)`, the batch bound times
    /// the throughput of one generate-plus-build service cycle.
    pub drift_down: f64,
    pub is_stable: bool,
    /// `drift_up / drift_down`; equals `lambda * E[S] / b` with
    /// `E[S] = 1/mu1 + 1/mu2` the mean two-stage service time.
    pub utilization: f64,
}

pub fn stability(params: &QueueParameters) -> StabilityReport {
    let (lambda, mu1, mu2) = (params.arrival_rate, params.build_rate, params.generate_rate);
    let drift_down = params.max_block_size as f64 * mu1 * mu2 / (mu1 + mu2);
    StabilityReport {
        drift_up: lambda,
        drift_down,
        is_stable: drift_down > lambda,
        utilization: lambda / drift_down,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::left_null_vector;

    fn params(lambda: f64, mu1: f64, mu2: f64, b: usize) -> QueueParameters {
        QueueParameters::new(lambda, mu1, mu2, b).unwrap()
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        assert!(matches!(
            QueueParameters::new(0.0, 1.0, 1.0, 1),
            Err(ParameterError::InvalidRate { name: "arrival_rate", .. })
        ));
        assert!(matches!(
            QueueParameters::new(0.3, -1.0, 1.0, 1),
            Err(ParameterError::InvalidRate { name: "build_rate", .. })
        ));
        assert!(matches!(
            QueueParameters::new(0.3, 1.0, f64::INFINITY, 1),
            Err(ParameterError::InvalidRate { name: "generate_rate", .. })
        ));
        assert!(matches!(QueueParameters::new(0.3, 1.0, 1.0, 0), Err(ParameterError::BlockSizeZero)));
    }

    #[test]
    fn blocks_for_b2_have_the_printed_shape() {
        let p = params(0.7, 1.1, 2.3, 2);
        let m = build_block_matrices(&p);
        let expected_a1 = [
            [-(0.7 + 2.3), 0.0, 0.0],
            [1.1, -(0.7 + 1.1), 0.0],
            [1.1, 0.0, -(0.7 + 1.1)],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.a1.get(i, j), expected_a1[i][j], "a1[{i}][{j}]");
                assert_eq!(m.a0.get(i, j), if i == j { 0.7 } else { 0.0 }, "a0[{i}][{j}]");
                let ab_expected = if (i, j) == (0, 2) { 2.3 } else { 0.0 };
                assert_eq!(m.ab.get(i, j), ab_expected, "ab[{i}][{j}]");
            }
        }
        // Single-entry boundary blocks: B_1 at (0,1), B_2 at (0,2), value mu2.
        for k in 1..=2 {
            for i in 0..3 {
                for j in 0..3 {
                    let expected = if (i, j) == (0, k) { 2.3 } else { 0.0 };
                    assert_eq!(m.boundary[k].get(i, j), expected, "B{k}[{i}][{j}]");
                }
            }
        }
    }

    #[test]
    fn blocks_for_b1_match_hand_substitution() {
        let m = build_block_matrices(&params(0.3, 1.0, 1.0, 1));
        let check = |got: &DenseMatrix, want: [[f64; 2]; 2], name: &str| {
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(got.get(i, j), want[i][j], "{name}[{i}][{j}]");
                }
            }
        };
        check(&m.a1, [[-1.3, 0.0], [1.0, -1.3]], "a1");
        check(&m.ab, [[0.0, 1.0], [0.0, 0.0]], "ab");
        check(&m.boundary[0], [[-0.3, 0.0], [1.0, -1.3]], "B0");
        check(&m.boundary[1], [[0.0, 1.0], [0.0, 0.0]], "B1");
    }

    #[test]
    fn assembled_generator_rows_sum_to_zero() {
        let p = params(0.45, 0.8, 1.7, 4);
        let m = build_block_matrices(&p);
        let n = p.phase_count();
        let row_sum = |mat: &DenseMatrix, i: usize| mat.row(i).iter().sum::<f64>();
        for i in 0..n {
            // Level 0: B0 + A0. Levels 1..=b: B_level + A1 + A0.
            // Levels > b: Ab + A1 + A0.
            let level0 = row_sum(&m.boundary[0], i) + row_sum(&m.a0, i);
            assert!(level0.abs() < 1e-12, "level 0 row {i}: {level0}");
            for k in 1..=p.max_block_size {
                let s = row_sum(&m.boundary[k], i) + row_sum(&m.a1, i) + row_sum(&m.a0, i);
                assert!(s.abs() < 1e-12, "level {k} row {i}: {s}");
            }
            let repeating = row_sum(&m.ab, i) + row_sum(&m.a1, i) + row_sum(&m.a0, i);
            assert!(repeating.abs() < 1e-12, "repeating level row {i}: {repeating}");
        }
    }

    #[test]
    fn theta_closed_form_cases() {
        let t = phase_stationary_theta(&params(0.2, 1.5, 1.5, 3));
        assert_eq!(t, vec![0.5, 0.0, 0.0, 0.5]);

        let t = phase_stationary_theta(&params(0.2, 1.0, 2.0, 5));
        assert!((t[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((t[5] - 2.0 / 3.0).abs() < 1e-15);
        assert!(t[1..5].iter().all(|&x| x == 0.0));

        let t = phase_stationary_theta(&params(0.3, 1.0, 1.0, 1));
        assert_eq!(t, vec![0.5, 0.5]);
    }

    #[test]
    fn theta_agrees_with_direct_null_vector() {
        let p = params(0.3, 1.0, 2.0, 4);
        let m = build_block_matrices(&p);
        let n = p.phase_count();
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a.set(i, j, m.a0.get(i, j) + m.a1.get(i, j) + m.ab.get(i, j));
            }
        }
        let v = left_null_vector(&a).unwrap();
        let theta = phase_stationary_theta(&p);
        for (vi, ti) in v.iter().zip(&theta) {
            assert!((vi - ti).abs() < 1e-10, "{v:?} vs {theta:?}");
        }
    }

    #[test]
    fn drift_identities_hold() {
        let p = params(0.37, 0.9, 2.4, 6);
        let m = build_block_matrices(&p);
        let theta = phase_stationary_theta(&p);
        let n = p.phase_count();
        let drift = |block: &DenseMatrix| -> f64 {
            (0..n).map(|i| theta[i] * block.row(i).iter().sum::<f64>()).sum()
        };
        let up = drift(&m.a0);
        let down = p.max_block_size as f64 * drift(&m.ab);
        assert!((up - p.arrival_rate).abs() < 1e-12);
        assert!((down - stability(&p).drift_down).abs() < 1e-12);
    }

    #[test]
    fn stability_examples() {
        let r = stability(&params(0.3, 1.0, 1.0, 1));
        assert_eq!(r.drift_down, 0.5);
        assert!(r.is_stable);
        assert!((r.utilization - 0.6).abs() < 1e-15);

        // Exact boundary equality is classified unstable.
        let r = stability(&params(4.0 / 3.0, 1.0, 2.0, 2));
        assert_eq!(r.drift_down, 4.0 / 3.0);
        assert!(!r.is_stable);
        assert_eq!(r.utilization, 1.0);

        // Start of the slow-build-rate sweep grid: comfortably stable.
        let r = stability(&params(0.3, 0.05, 2.0, 40));
        assert!((r.drift_down - 40.0 * 0.05 * 2.0 / 2.05).abs() < 1e-12);
        assert!(r.is_stable);
    }
}
