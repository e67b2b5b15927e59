use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use ticktock_core::*;

fn stepping(c: &mut Criterion) {
    let mut group = c.benchmark_group("step_both");
    for d in [8usize, 32, 128] {
        let clock = peres_clock(d, 0.7, 0.1, 0).unwrap();
        let state = clock.initial().clone();
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| clock.step_both(black_box(&state)).unwrap())
        });
    }
    group.finish();
}

fn waiting_pmf(c: &mut Criterion) {
    let clock = wavepacket_clock(64, 8, 0.5, 0.02).unwrap();
    c.bench_function("waiting_time_pmf/wavepacket64x256", |b| {
        b.iter(|| waiting_time_pmf(&clock, clock.initial(), black_box(256)).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let a = peres_clock(8, 1.0, 0.1, 0).unwrap();
    let b = peres_clock(8, 1.0, 0.1, 4).unwrap();
    c.bench_function("exact_pt_dp/peres8", |bch| {
        bch.iter(|| exact_pt_dp(&a, &b, black_box(100), 600).unwrap())
    });
}

fn monte_carlo(c: &mut Criterion) {
    let a = peres_clock(10, 1.0, 0.1, 5).unwrap();
    let b = peres_clock(10, 1.0, 0.1, 0).unwrap();
    c.bench_function("estimate_mean_ticks/peres10x200", |bch| {
        bch.iter(|| estimate_mean_ticks(&a, &b, 200, 100_000, black_box(3)).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = stepping, waiting_pmf, oracle, monte_carlo
}
criterion_main!(benches);
