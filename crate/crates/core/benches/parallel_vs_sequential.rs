use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use kgcert::verify::{
    default_half_width, grid_oracle_with, local_min_probe, run_suite_with, ProbeConfig, SuiteOptions,
};
use kgcert::{optimal_gain, ExecMode, KalmanProblem, MeasurementMode, ObjectiveSpec};

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn problem(n: usize, m: usize, seed: u64) -> KalmanProblem {
    KalmanProblem::random(n, m, (-2.0, 2.0), (-2.0, 2.0), MeasurementMode::Gaussian, seed).unwrap()
}

fn config(exec: ExecMode) -> ProbeConfig {
    ProbeConfig::new(100, vec![1e-2, 1e-1], 42).unwrap().with_exec(exec)
}

fn grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("grid_oracle");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    let prob = problem(2, 2, 1);
    let half = default_half_width(&optimal_gain(&prob).unwrap());
    for (name, mode) in MODES {
        let cfg = config(mode);
        group.bench_with_input(BenchmarkId::new(name, "2x2 trace 41pt"), &cfg, |b, cfg| {
            b.iter(|| grid_oracle_with(black_box(&prob), &ObjectiveSpec::Trace, half, 41, cfg).unwrap())
        });
    }
    group.finish();
}

fn local_min(c: &mut Criterion) {
    let mut group = c.benchmark_group("local_min_probe");
    let prob = problem(8, 4, 2);
    for (name, mode) in MODES {
        let cfg = config(mode);
        group.bench_with_input(BenchmarkId::new(name, "8x4 lmin"), &cfg, |b, cfg| {
            b.iter(|| local_min_probe(black_box(&prob), &ObjectiveSpec::SmallestEig, cfg))
        });
    }
    group.finish();
}

fn suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_suite");
    group.sample_size(10);
    let prob = problem(5, 3, 3);
    let opts = SuiteOptions { grid: false, ..SuiteOptions::default() };
    for (name, mode) in MODES {
        let cfg = config(mode);
        group.bench_with_input(BenchmarkId::new(name, "5x3"), &cfg, |b, cfg| {
            b.iter(|| run_suite_with(black_box(&prob), cfg, &opts))
        });
    }
    group.finish();
}

criterion_group!(benches, grid, local_min, suite);
criterion_main!(benches);
