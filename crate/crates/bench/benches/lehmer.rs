use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lnn_core::grad::{lehmer_complex_with_grad, lehmer_real_with_grad};
use lnn_core::lehmer::{lehmer_complex, lehmer_real, SuddencyComplex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn inputs(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    let x = (0..n).map(|_| rng.random_range(0.37..2.7)).collect();
    let w = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
    (x, w)
}

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("transform");
    for n in [8, 64, 784] {
        let (x, w) = inputs(n);
        let s = SuddencyComplex::new(1.3, -0.7);
        group.bench_with_input(BenchmarkId::new("real", n), &n, |b, _| {
            b.iter(|| lehmer_real(black_box(&x), black_box(&w), 1.3).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("complex", n), &n, |b, _| {
            b.iter(|| lehmer_complex(black_box(&x), black_box(&w), s).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("real_grad", n), &n, |b, _| {
            b.iter(|| lehmer_real_with_grad(black_box(&x), black_box(&w), 1.3).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("complex_grad", n), &n, |b, _| {
            b.iter(|| lehmer_complex_with_grad(black_box(&x), black_box(&w), s).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, transforms);
criterion_main!(benches);
