use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fadet_core::{ioa, iou, BBox};

fn boxes(n: usize) -> Vec<BBox> {
    (0..n)
        .map(|i| {
            let x = (i * 37 % 500) as f64;
            let y = (i * 91 % 400) as f64;
            BBox::new(x, y, x + 20.0 + (i % 60) as f64, y + 30.0 + (i % 45) as f64).unwrap()
        })
        .collect()
}

fn bench_overlap(c: &mut Criterion) {
    let b = boxes(1024);
    c.bench_function("iou 1024x1024", |bench| {
        bench.iter(|| {
            let mut acc = 0.0;
            for x in &b {
                for y in &b {
                    acc += iou(x, y);
                }
            }
            black_box(acc)
        })
    });
    c.bench_function("ioa 1024x1024", |bench| {
        bench.iter(|| {
            let mut acc = 0.0;
            for x in &b {
                for y in &b {
                    acc += ioa(x, y);
                }
            }
            black_box(acc)
        })
    });
}

criterion_group!(benches, bench_overlap);
criterion_main!(benches);
