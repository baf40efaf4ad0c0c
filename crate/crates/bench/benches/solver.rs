//! Scaling of the rate-matrix iteration and the downstream measures with
//! block size, plus simulator event throughput. Run with
//! `cargo bench -p blockq-bench`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use blockq::sim::{simulate, SimConfig};
use blockq::{measures, MatGeomSolution, QueueParameters, SolverOptions};

fn solver_params(b: usize) -> QueueParameters {
    // Moderate load for every block size so iteration counts stay
    // comparable: the heavy-traffic slowdown is a separate bench.
    QueueParameters::new(0.3, 1.0, 2.0, b).unwrap()
}

fn bench_rate_matrix(c: &mut Criterion) {
    let mut group = c.benchmark_group("rate_matrix");
    for b in [10_usize, 40, 160, 500] {
        let params = solver_params(b);
        group.bench_with_input(BenchmarkId::from_parameter(b), &params, |bench, p| {
            bench.iter(|| MatGeomSolution::solve(p, &SolverOptions::default()).unwrap());
        });
    }
    group.finish();
}

fn bench_near_boundary(c: &mut Criterion) {
    // build_rate at 1.05x the stability boundary: the slowest iteration
    // the acceptance sweeps ever ask for.
    let b = 40;
    let (lambda, mu2) = (0.3, 2.0);
    let critical = lambda * mu2 / (b as f64 * mu2 - lambda);
    let params = QueueParameters::new(lambda, 1.05 * critical, mu2, b).unwrap();
    c.bench_function("rate_matrix_near_boundary_b40", |bench| {
        bench.iter(|| MatGeomSolution::solve(&params, &SolverOptions::default()).unwrap());
    });
}

fn bench_measures(c: &mut Criterion) {
    let params = solver_params(160);
    let solution = MatGeomSolution::solve(&params, &SolverOptions::default()).unwrap();
    c.bench_function("measures_b160", |bench| {
        bench.iter(|| measures::evaluate(&solution, 1e-10));
    });
}

fn bench_simulator(c: &mut Criterion) {
    let config = SimConfig::new(solver_params(10), 7, 50_000);
    c.bench_function("simulate_50k_confirmations", |bench| {
        bench.iter(|| simulate(&config));
    });
}

criterion_group!(
    benches,
    bench_rate_matrix,
    bench_near_boundary,
    bench_measures,
    bench_simulator
);
criterion_main!(benches);
