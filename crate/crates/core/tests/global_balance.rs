//! End-to-end balance checks: the assembled stationary vector must satisfy
//! the level-cut equations of the full generator, not merely the fixed
//! point equation the solver iterates on.

use blockq::model::build_block_matrices;
use blockq::{MatGeomSolution, QueueParameters, SolverOptions};

fn assert_level_cuts(lambda: f64, mu1: f64, mu2: f64, b: usize) {
    let p = QueueParameters::new(lambda, mu1, mu2, b).unwrap();
    let m = build_block_matrices(&p);
    let s = MatGeomSolution::solve(&p, &SolverOptions::default()).unwrap();
    let n = p.phase_count();

    // Enough levels for every cut through n = b + 4.
    let levels: Vec<Vec<f64>> = (0..=2 * b + 5).map(|k| s.stationary_level(k)).collect();

    // Interior cuts: pi_{n-1} A0 + pi_n A1 + pi_{n+b} Ab = 0. The same form
    // holds from n = 1 upward because the boundary blocks B_k only feed
    // level 0.
    for cut in 1..=b + 4 {
        let a0 = m.a0.vecmat(&levels[cut - 1]);
        let a1 = m.a1.vecmat(&levels[cut]);
        let ab = m.ab.vecmat(&levels[cut + b]);
        for j in 0..n {
            let v = a0[j] + a1[j] + ab[j];
            assert!(
                v.abs() < 1e-9,
                "level cut {cut}, phase {j}: imbalance {v:e} at (lambda={lambda}, mu1={mu1}, mu2={mu2}, b={b})"
            );
        }
    }

    // Boundary cut: only levels 0..=b feed level 0, through the B_k blocks.
    let mut into_zero = vec![0.0; n];
    for (bk, level) in m.boundary.iter().zip(&levels) {
        let contribution = bk.vecmat(level);
        for (acc, c) in into_zero.iter_mut().zip(&contribution) {
            *acc += c;
        }
    }
    for (j, v) in into_zero.iter().enumerate() {
        assert!(v.abs() < 1e-9, "boundary cut, phase {j}: imbalance {v:e}");
    }
}

#[test]
fn level_cuts_balance_at_unit_block() {
    assert_level_cuts(0.3, 1.0, 1.0, 1);
}

#[test]
fn level_cuts_balance_at_small_blocks() {
    assert_level_cuts(0.3, 1.0, 2.0, 2);
    assert_level_cuts(0.5, 1.0, 2.0, 3);
    assert_level_cuts(0.7, 0.6, 1.4, 7);
}

#[test]
fn level_cuts_balance_under_load() {
    // Max service throughput is 2*1*1/(1+1) = 1, so utilization is 0.93:
    // exercises slow geometric decay.
    assert_level_cuts(0.93, 1.0, 1.0, 2);
}
