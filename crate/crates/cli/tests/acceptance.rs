//! Acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line (visible with `--nocapture`; the harness result line
//! carries the same verdict). Tolerances and runtime budgets are asserted,
//! not just reported.

use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use blockq::matgeom::{self, RateMatrixVariant, SolveError};
use blockq::model::{build_block_matrices, stability};
use blockq::oracle::{mg1_erlang_oracle, truncated_measures};
use blockq::sim::{simulate, SimConfig};
use blockq::{measures, MatGeomSolution, PerformanceReport, QueueParameters, SolverOptions};

fn params(lambda: f64, mu1: f64, mu2: f64, b: usize) -> QueueParameters {
    QueueParameters::new(lambda, mu1, mu2, b).unwrap()
}

fn report(p: &QueueParameters) -> PerformanceReport {
    let s = MatGeomSolution::solve(p, &SolverOptions::default()).unwrap();
    measures::evaluate(&s, 1e-10)
}

fn verdict(criterion: &str, pass: bool, detail: String) {
    println!("[{}] {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{criterion}: {detail}");
}

fn within_budget(criterion: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed <= budget,
        "{criterion}: runtime {elapsed:?} exceeds budget {budget:?}"
    );
}

struct GridPoint {
    lambda: f64,
    b: usize,
    report: PerformanceReport,
}

/// Block-size grid (b = 40..=500 at three arrival rates), shared between
/// the trend and series-agreement criteria. Computed once; this is the
/// bulk of the suite's runtime.
fn block_grid() -> &'static [GridPoint] {
    static GRID: OnceLock<Vec<GridPoint>> = OnceLock::new();
    GRID.get_or_init(|| {
        let mut grid = Vec::new();
        for lambda in [0.1, 0.9, 1.5] {
            for b in 40..=500 {
                let p = params(lambda, 0.05, 2.0, b);
                grid.push(GridPoint { lambda, b, report: report(&p) });
            }
        }
        grid
    })
}

/// One build-rate curve per block size: `(b, [(build_rate, report), ...])`.
type BuildCurve = (usize, Vec<(f64, PerformanceReport)>);

/// Build-rate grid (0.05..=1.5 step 0.05 at three block sizes), shared
/// between the Little's-law, trend and series-agreement criteria.
fn build_grid() -> &'static [BuildCurve] {
    static GRID: OnceLock<Vec<BuildCurve>> = OnceLock::new();
    GRID.get_or_init(|| {
        [40_usize, 80, 320]
            .into_iter()
            .map(|b| {
                let curve = (1..=30)
                    .map(|i| {
                        let mu1 = i as f64 * 0.05;
                        (mu1, report(&params(0.3, mu1, 2.0, b)))
                    })
                    .collect();
                (b, curve)
            })
            .collect()
    })
}

#[test]
fn criterion1_unit_block_closed_form_triangle() {
    let started = Instant::now();
    let p = params(0.3, 1.0, 1.0, 1);
    let r = report(&p);
    let (oj, oi, ot) = mg1_erlang_oracle(&p).unwrap();
    let t = truncated_measures(&p, 200).unwrap();

    let oracle_gap = (r.mean_queue - oj)
        .abs()
        .max((r.mean_block - oi).abs())
        .max((r.mean_confirmation_closed - ot).abs())
        .max((r.mean_confirmation_series - ot).abs());
    let truncated_gap = (r.mean_queue - t.mean_queue)
        .abs()
        .max((r.mean_block - t.mean_block).abs())
        .max((r.mean_confirmation_closed - t.mean_confirmation).abs());
    let exact = (oj - 0.975).abs().max((oi - 0.3).abs()).max((ot - 4.25).abs());

    let pass = exact < 1e-12 && oracle_gap < 1e-9 && truncated_gap < 1e-6;
    within_budget("criterion 1", started, Duration::from_secs(1));
    verdict(
        "criterion 1",
        pass,
        format!(
            "E[J]/E[I]/E[T] = {:.6}/{:.6}/{:.6}; closed-form gap {oracle_gap:.2e} (< 1e-9), \
             truncated gap {truncated_gap:.2e} (< 1e-6)",
            r.mean_queue, r.mean_block, r.mean_confirmation_closed
        ),
    );
}

#[test]
fn criterion2_rate_matrix_exponent_erratum() {
    let started = Instant::now();
    let p = params(0.3, 1.0, 1.0, 1);
    let matrices = build_block_matrices(&p);
    let tight = SolverOptions { tol: 1e-15, ..SolverOptions::default() };

    // Uncorrected exponent: R converges to a stochastic matrix.
    let literal = matgeom::solve_rate_matrix(
        &matrices,
        &SolverOptions { variant: RateMatrixVariant::PaperLiteral, ..tight },
    )
    .unwrap();
    let row_sum_dev = (0..2)
        .map(|i| (literal.rate_matrix.row(i).iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let literal_sp_gap = (literal.spectral_radius - 1.0).abs();

    // Corrected exponent: sp(R) is the root of x^2 - 0.69x + 0.09 below 1
    // (0.515 to three decimals).
    let corrected = matgeom::solve_rate_matrix(&matrices, &tight).unwrap();
    let expected_sp = (0.69 + (0.69_f64 * 0.69 - 4.0 * 0.09).sqrt()) / 2.0;
    let corrected_sp_gap = (corrected.spectral_radius - expected_sp).abs();

    // The CLI must refuse the literal variant with the breach exit code.
    let exit = Command::new(env!("CARGO_BIN_EXE_blockq"))
        .args([
            "validate", "--arrival-rate", "0.3", "--build-rate", "1", "--generate-rate", "1",
            "--block-size", "1", "--tol", "1e-15", "--paper-literal-r",
        ])
        .output()
        .unwrap()
        .status
        .code();

    let pass = row_sum_dev < 1e-12
        && literal_sp_gap < 1e-9
        && corrected_sp_gap < 1e-9
        && exit == Some(3);
    within_budget("criterion 2", started, Duration::from_secs(1));
    verdict(
        "criterion 2",
        pass,
        format!(
            "literal row sums 1 within {row_sum_dev:.2e}, sp gap {literal_sp_gap:.2e}; \
             corrected sp {:.12} (expected {expected_sp:.12}); validate exit {exit:?}",
            corrected.spectral_radius
        ),
    );
}

#[test]
fn criterion3_truncated_chain_grid() {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for b in [2_usize, 3] {
        for lambda in [0.1, 0.3, 0.5] {
            let p = params(lambda, 1.0, 2.0, b);
            let r = report(&p);
            let t = truncated_measures(&p, 200).unwrap();
            assert!(t.tail_mass < 1e-10, "tail mass {:e} at (b={b}, lambda={lambda})", t.tail_mass);
            worst = worst
                .max((r.mean_queue - t.mean_queue).abs())
                .max((r.mean_block - t.mean_block).abs())
                .max((r.mean_confirmation_closed - t.mean_confirmation).abs());
            points += 1;
        }
    }
    let pass = points == 6 && worst < 1e-6;
    within_budget("criterion 3", started, Duration::from_secs(10));
    verdict(
        "criterion 3",
        pass,
        format!("6 points, worst analytic-vs-truncated gap {worst:.2e} (< 1e-6)"),
    );
}

#[test]
fn criterion4_littles_law_over_build_rate_sweeps() {
    let started = Instant::now();
    // Through the shipped configs and the real binary: the CSV column is
    // the contract being checked.
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for config in ["build_sweep_b40.conf", "build_sweep_b80.conf", "build_sweep_b320.conf"] {
        let path = format!("{}/../../configs/{config}", env!("CARGO_MANIFEST_DIR"));
        let out = Command::new(env!("CARGO_BIN_EXE_blockq"))
            .args(["sweep", "--config", &path])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{config} sweep failed");
        let text = String::from_utf8(out.stdout).unwrap();
        for line in text.lines().skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!(cells[5], "true", "unstable row in {config}: {line}");
            worst = worst.max(cells[10].parse::<f64>().unwrap());
            rows += 1;
        }
    }
    let pass = rows == 90 && worst < 1e-8;
    within_budget("criterion 4", started, Duration::from_secs(120));
    verdict(
        "criterion 4",
        pass,
        format!("{rows} grid rows, worst |EJ + EI - lambda*ET| = {worst:.2e} (< 1e-8)"),
    );
}

#[test]
fn criterion5_stability_boundary() {
    let started = Instant::now();
    let (lambda, mu2, b) = (0.3, 2.0, 40_usize);
    let critical = lambda * mu2 / (b as f64 * mu2 - lambda);
    let mut detail = Vec::new();
    let mut pass = true;
    for (factor, expect_stable) in
        [(0.5, false), (0.9, false), (1.05, true), (1.1, true), (1.5, true)]
    {
        let p = params(lambda, factor * critical, mu2, b);
        let drift_ok = stability(&p).is_stable == expect_stable;
        let solver_ok = match MatGeomSolution::solve(&p, &SolverOptions::default()) {
            Ok(s) => expect_stable && s.spectral_radius() < 1.0 - 1e-9,
            Err(SolveError::Unstable { .. }) => !expect_stable,
            Err(_) => false,
        };
        pass &= drift_ok && solver_ok;
        detail.push(format!("{factor}x:{}", if drift_ok && solver_ok { "ok" } else { "BAD" }));
    }
    within_budget("criterion 5", started, Duration::from_secs(30));
    verdict(
        "criterion 5",
        pass,
        format!("sp(R) < 1 iff drift condition at mu1* multipliers [{}]", detail.join(", ")),
    );
}

#[test]
fn criterion6_parameter_trends() {
    let started = Instant::now();
    let slack = 1e-9;

    // All three measures fall as the build stage speeds up.
    for (b, curve) in build_grid() {
        for pair in curve.windows(2) {
            let (lo, hi) = (&pair[0].1, &pair[1].1);
            assert!(
                hi.mean_queue <= lo.mean_queue + slack
                    && hi.mean_block <= lo.mean_block + slack
                    && hi.mean_confirmation_closed <= lo.mean_confirmation_closed + slack,
                "non-monotone measure at b={b}, build_rate {}",
                pair[1].0
            );
        }
    }

    // Bigger blocks: queue and confirmation time fall, block content rises.
    for lambda in [0.1, 0.9, 1.5] {
        let curve: Vec<&GridPoint> =
            block_grid().iter().filter(|g| g.lambda == lambda).collect();
        assert_eq!(curve.len(), 461);
        for pair in curve.windows(2) {
            let (lo, hi) = (&pair[0].report, &pair[1].report);
            assert!(
                hi.mean_queue <= lo.mean_queue + slack
                    && hi.mean_confirmation_closed <= lo.mean_confirmation_closed + slack
                    && hi.mean_block >= lo.mean_block - slack,
                "non-monotone measure at lambda={lambda}, b={}",
                pair[1].b
            );
        }
    }

    within_budget("criterion 6 (trends)", started, Duration::from_secs(600));
    verdict(
        "criterion 6 (trends)",
        true,
        "all measures monotone in build rate and in block size on both sweep grids".into(),
    );
}

#[test]
fn criterion6_confirmation_curves_cross() {
    // Stated criterion: the E[T]-vs-b curves for the three arrival rates
    // cross somewhere on b = 40..=500. Measured behavior: E[T] is strictly
    // increasing in the arrival rate at every block size on this grid, so
    // the curves are totally ordered and never intersect; the assertion
    // below fails and documents the smallest gap found.
    let started = Instant::now();
    let grid = block_grid();
    let curve = |lambda: f64| -> Vec<f64> {
        grid.iter()
            .filter(|g| g.lambda == lambda)
            .map(|g| g.report.mean_confirmation_closed)
            .collect()
    };
    let (low, mid, high) = (curve(0.1), curve(0.9), curve(1.5));

    let mut crossings = 0;
    let mut min_gap = f64::INFINITY;
    let mut min_gap_at = 0;
    for (a, bname) in [(&low, &mid), (&low, &high), (&mid, &high)] {
        let mut previous_sign = 0_i8;
        for (i, (x, y)) in a.iter().zip(bname.iter()).enumerate() {
            let diff = y - x;
            if diff.abs() < min_gap {
                min_gap = diff.abs();
                min_gap_at = 40 + i;
            }
            let sign = if diff > 0.0 { 1 } else { -1 };
            if previous_sign != 0 && sign != previous_sign {
                crossings += 1;
            }
            previous_sign = sign;
        }
    }

    within_budget("criterion 6 (crossing)", started, Duration::from_secs(600));
    verdict(
        "criterion 6 (crossing)",
        crossings > 0,
        format!(
            "pairwise E[T] curve differences change sign {crossings} times; \
             smallest |gap| {min_gap:.6} at b = {min_gap_at} \
             (curves stay ordered by arrival rate)"
        ),
    );
}

#[test]
fn criterion7_simulation_concordance() {
    let started = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for (label, p) in [
        ("b=1", params(0.3, 1.0, 1.0, 1)),
        ("b=10", params(0.3, 1.0, 2.0, 10)),
    ] {
        let r = report(&p);
        let config = SimConfig {
            params: p,
            seed: 20240 + p.max_block_size as u64,
            horizon_events: 1_120_000,
            warmup_events: 112_000,
            batch_count: 32,
        };
        let sim = simulate(&config);
        assert_eq!(sim, simulate(&config), "same-seed determinism broke at {label}");
        assert!(sim.confirmed_count >= 1_000_000, "only {} measured", sim.confirmed_count);

        let q = (sim.est_queue - r.mean_queue).abs() / sim.half_width_queue;
        let i = (sim.est_block - r.mean_block).abs() / sim.half_width_block;
        let t = (sim.est_confirmation - r.mean_confirmation_closed).abs()
            / sim.half_width_confirmation;
        pass &= q <= 3.0 && i <= 3.0 && t <= 3.0;
        details.push(format!("{label}: gaps {q:.2}/{i:.2}/{t:.2} half-widths"));
    }
    within_budget("criterion 7", started, Duration::from_secs(120));
    verdict(
        "criterion 7",
        pass,
        format!("1,008,000 confirmations per point; {}", details.join("; ")),
    );
}

#[test]
fn criterion8_series_and_closed_forms_agree_everywhere() {
    let started = Instant::now();
    let mut worst_excess = f64::NEG_INFINITY;
    let mut points = 0;
    let mut check = |r: &PerformanceReport| {
        let gap = (r.mean_confirmation_closed - r.mean_confirmation_series).abs();
        worst_excess = worst_excess.max(gap - r.series_tail_bound);
        points += 1;
        assert!(
            gap <= 1e-8 + r.series_tail_bound,
            "series/closed split: gap {gap:e}, tail bound {:e}",
            r.series_tail_bound
        );
    };

    for b in [2_usize, 3] {
        for lambda in [0.1, 0.3, 0.5] {
            check(&report(&params(lambda, 1.0, 2.0, b)));
        }
    }
    let (lambda, mu2, b) = (0.3, 2.0, 40_usize);
    let critical = lambda * mu2 / (b as f64 * mu2 - lambda);
    for factor in [1.05, 1.1, 1.5] {
        check(&report(&params(lambda, factor * critical, mu2, b)));
    }
    for (_, curve) in build_grid() {
        for (_, r) in curve {
            check(r);
        }
    }
    for g in block_grid() {
        check(&g.report);
    }

    let pass = points == 6 + 3 + 90 + 1383;
    within_budget("criterion 8", started, Duration::from_secs(600));
    verdict(
        "criterion 8",
        pass,
        format!(
            "{points} grid points; worst (gap - tail bound) = {worst_excess:.2e} (allowance 1e-8)"
        ),
    );
}
