use alignmark::matrix::BinaryMatrix;
use alignmark::search::{search, spiral_d1_check, SearchConfig};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn bench_small_search(c: &mut Criterion) {
    c.bench_function("search 4x4 full", |b| {
        b.iter(|| search(black_box(&SearchConfig::new(4, 4))).unwrap())
    });
    let mut per_p = SearchConfig::new(4, 4);
    per_p.per_p = true;
    c.bench_function("search 4x4 per-p", |b| b.iter(|| search(black_box(&per_p)).unwrap()));
}

fn bench_spiral(c: &mut Criterion) {
    let m: BinaryMatrix = "1111011\n1001101\n0110010\n1101011\n1010101\n1001101\n1111011\n"
        .parse()
        .unwrap();
    c.bench_function("spiral check 7x7 at tight threshold", |b| {
        b.iter(|| spiral_d1_check(black_box(&m), 19))
    });
}

criterion_group!(benches, bench_small_search, bench_spiral);
criterion_main!(benches);
