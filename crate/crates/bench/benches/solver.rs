use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};

use uzawa_core::solver::{bellman_backup, solve_value_iteration};
use uzawa_core::verify::means::{power_mean, WeightedSample};
use uzawa_core::verify::sample_transitions;
use uzawa_core::{GridSpec, ModelParams, SolveOptions, ValueField};

fn backup(c: &mut Criterion) {
    let p = ModelParams::baseline();
    let grid = GridSpec::log_spaced((0.25, 4.0), 8, (0.25, 4.0), 8).unwrap();
    let opts = SolveOptions::default();
    let v = ValueField::constant(grid, -3.0).unwrap();
    c.bench_function("bellman_backup 8x8", |b| {
        b.iter(|| bellman_backup(black_box(&v), &p, &opts).unwrap())
    });
}

fn means(c: &mut Criterion) {
    let s = WeightedSample::new((1..=16).map(|i| i as f64 * 0.37).collect(), vec![1.0; 16]).unwrap();
    c.bench_function("power_mean n=16", |b| b.iter(|| power_mean(black_box(&s), black_box(-2.5)).unwrap()));
}

fn sampling(c: &mut Criterion) {
    let p = ModelParams::baseline();
    c.bench_function("sample_transitions 1e4", |b| b.iter(|| sample_transitions(&p, 10_000, 1)));
}

fn small_solve(c: &mut Criterion) {
    let p = ModelParams::baseline();
    let grid = GridSpec::log_spaced((0.25, 4.0), 6, (0.25, 4.0), 6).unwrap();
    let opts = SolveOptions { tol: 1e-4, ..SolveOptions::default() };
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    g.bench_function("value iteration 6x6", |b| {
        b.iter_batched(|| grid.clone(), |grid| solve_value_iteration(&p, &grid, &opts).unwrap(), BatchSize::SmallInput)
    });
    g.finish();
}

criterion_group!(benches, backup, means, sampling, small_solve);
criterion_main!(benches);
