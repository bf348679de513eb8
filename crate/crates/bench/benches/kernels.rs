use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use lupe_bench::fixture;
use lupe_core::projectors::project_v;

fn kernels(c: &mut Criterion) {
    for n in [16usize, 32] {
        let (sim, state) = fixture(n);
        let d = sim.domain();
        let id = format!("{n}x{n}x{}", n / 2);
        c.bench_with_input(BenchmarkId::new("grad_h", &id), &state, |b, s| {
            b.iter(|| d.spectral().grad_h(black_box(&s.temp)))
        });
        c.bench_with_input(BenchmarkId::new("project_v", &id), &state, |b, s| {
            b.iter(|| project_v(black_box(&s.v_star), d))
        });
        c.bench_with_input(BenchmarkId::new("filter", &id), &state, |b, s| {
            b.iter(|| sim.filter().apply(black_box(&s.temp), d))
        });
        c.bench_with_input(BenchmarkId::new("step", &id), &state, |b, s| {
            b.iter(|| sim.step(black_box(s)).unwrap())
        });
    }
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = kernels
}
criterion_main!(benches);
