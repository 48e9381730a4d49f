use std::hint::black_box;
use std::io::Cursor;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use fadet_bench::fixture;
use fadet_core::detections::{parse_detection_line, DetectionSchema};
use fadet_core::metrics::{average_precision, match_detections, ApInterpolation, MatchConfig};
use fadet_core::{Evaluator, Protocol};

fn bench_matching(c: &mut Criterion) {
    let (ds, file) = fixture(200, 100.0);
    let ev = Evaluator::new(&ds, Protocol::default()).unwrap();
    let (evals, _) = ev.evaluate_stream(Cursor::new(&file), "bench", 1).unwrap();
    let labels: Vec<(f64, bool)> = evals
        .iter()
        .flat_map(|e| e.outcome.labels.iter().map(|l| (l.score, l.is_tp)))
        .collect();
    let num_gt = ds.object_count();
    c.bench_function("average_precision pooled", |b| {
        b.iter(|| average_precision(black_box(&labels), num_gt, ApInterpolation::AllPoints))
    });

    let text = String::from_utf8(file).unwrap();
    let line = text.lines().next().unwrap();
    let schema = DetectionSchema {
        num_categories: ds.categories.len(),
        num_attributes: ds.attributes.len(),
        max_detections: None,
        strict_cap: false,
    };
    let set = parse_detection_line(line, &schema).unwrap().set;
    let gts = &ds.images[0].objects;
    c.bench_function("match_detections 1 image", |b| {
        b.iter(|| match_detections(black_box(&set.detections), gts, &MatchConfig::default()))
    });
}

fn bench_stream(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate_stream");
    group.sample_size(10);
    for rate in [10.0, 100.0] {
        let (ds, file) = fixture(500, rate);
        let ev = Evaluator::new(&ds, Protocol::default()).unwrap();
        group.throughput(Throughput::Bytes(file.len() as u64));
        group.bench_with_input(BenchmarkId::new("distractors", rate), &file, |b, file| {
            b.iter(|| {
                let (evals, _) = ev.evaluate_stream(Cursor::new(file), "bench", 1).unwrap();
                black_box(ev.partitions(&evals))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_matching, bench_stream);
criterion_main!(benches);
