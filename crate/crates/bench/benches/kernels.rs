use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use smalldev::smallball::{saddlepoint_log_prob, tilted_mc_log_prob, direct_sim_log_prob_window};
use smalldev::theory::constant_c;
use smalldev::{McConfig, SaddleOrder};
use smalldev_bench::{ar1_operator, ar1_window, harmonic_weights, power_spectrum};

fn eigensolve(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigensolve");
    group.sample_size(10);
    for n in [100usize, 250, 500] {
        let op = ar1_operator(n);
        group.bench_with_input(BenchmarkId::from_parameter(2 * n + 1), &op, |b, op| {
            b.iter_batched(|| op.gram(), |g| g.eigenvalues().unwrap(), BatchSize::LargeInput)
        });
    }
    group.finish();
}

fn quadrature(c: &mut Criterion) {
    let window = ar1_window();
    let w = harmonic_weights();
    let mut group = c.benchmark_group("constant_c");
    for tol in [1e-6, 1e-10, 1e-13] {
        group.bench_with_input(BenchmarkId::from_parameter(tol), &tol, |b, &tol| {
            b.iter(|| constant_c(&window, &w, tol).unwrap())
        });
    }
    group.finish();
}

fn saddlepoint(c: &mut Criterion) {
    let mut group = c.benchmark_group("saddlepoint");
    for len in [1_000usize, 10_000, 100_000] {
        let lambdas = power_spectrum(len);
        group.bench_with_input(BenchmarkId::from_parameter(len), &lambdas, |b, l| {
            b.iter(|| saddlepoint_log_prob(l, 0.1, SaddleOrder::Corrected).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    let cfg = McConfig::new(20_000, 3);
    let lambdas = power_spectrum(401);
    group.bench_function("tilted_mc/401", |b| b.iter(|| tilted_mc_log_prob(&lambdas, 0.8, &cfg).unwrap()));
    let window = ar1_window();
    let w = harmonic_weights();
    group.bench_function("direct_sim/N200", |b| {
        b.iter(|| direct_sim_log_prob_window(&window, &w, 200, 1.2, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, eigensolve, quadrature, saddlepoint, monte_carlo);
criterion_main!(benches);
