use std::hint::black_box;

use calmfeed_core::rng::SeededRng;
use calmfeed_core::stats::{holm_adjust, paired_t, student_t_cdf};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench(c: &mut Criterion) {
    let mut rng = SeededRng::new(9);
    let base: Vec<f64> = (0..800).map(|_| rng.unit()).collect();
    let treated: Vec<f64> = base.iter().map(|x| x - 0.05 * rng.unit()).collect();
    c.bench_function("paired t n=800", |b| b.iter(|| paired_t(black_box(&base), black_box(&treated)).unwrap()));

    let mut group = c.benchmark_group("student t cdf");
    for df in [1.0, 10.0, 799.0] {
        group.bench_with_input(BenchmarkId::from_parameter(df), &df, |b, &df| {
            b.iter(|| student_t_cdf(black_box(2.5), df))
        });
    }
    group.finish();

    let p: Vec<f64> = (0..6).map(|_| rng.unit() * 1e-3).collect();
    c.bench_function("holm 6", |b| b.iter(|| holm_adjust(black_box(&p)).unwrap()));
}

criterion_group!(benches, bench);
criterion_main!(benches);
