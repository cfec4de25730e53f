use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nash_stream_bench::{balanced, binary, staircase};
use nash_stream_core::online::DEFAULT_LEVEL_CAP;
use nash_stream_core::{half_and_half, myopic_greedy, rounded_greedy_guessed, solve_eg, waterfill, EgOptions};
use std::hint::black_box;

fn bench_waterfill(c: &mut Criterion) {
    let mut group = c.benchmark_group("waterfill");
    for n in [4usize, 64, 1024] {
        let u: Vec<f64> = (0..n).map(|i| (i % 7) as f64 * 0.3).collect();
        let v: Vec<f64> = (0..n).map(|i| 1.0 / (1 + i % 5) as f64).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| waterfill(black_box(&u), black_box(&v), 1.0).unwrap())
        });
    }
    group.finish();
}

fn bench_online(c: &mut Criterion) {
    let inst = balanced(16, 200);
    let bin = binary(16, 200);
    let mut group = c.benchmark_group("online");
    group.bench_function("myopic/16x200", |b| b.iter(|| myopic_greedy(black_box(&inst)).unwrap()));
    group.bench_function("half-and-half/16x200", |b| b.iter(|| half_and_half(black_box(&inst), 4.0).unwrap()));
    group.bench_function("rounded-guessed/16x200", |b| {
        b.iter(|| rounded_greedy_guessed(black_box(&bin), 1, DEFAULT_LEVEL_CAP).unwrap())
    });
    group.finish();
}

fn bench_offline(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_eg");
    group.sample_size(20);
    for (name, inst) in [("balanced/8x50", balanced(8, 50)), ("staircase/6", staircase(6))] {
        group.bench_function(name, |b| b.iter(|| solve_eg(black_box(&inst), &EgOptions::default()).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_waterfill, bench_online, bench_offline);
criterion_main!(benches);
