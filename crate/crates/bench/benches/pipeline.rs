use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use geodp::baselines::{smooth_sensitivity, wavelet_publish};
use geodp::synth::{clustered_2d, stream_rng, uniform_sorted};
use geodp::{isotonic_l1, isotonic_l2, map_dataset, publish, GroupSize, HilbertConfig, Noise, RangeCounter, Rect};
use rand::Rng;

fn pava(c: &mut Criterion) {
    let mut g = c.benchmark_group("isotonic");
    for n in [1_000usize, 100_000] {
        let mut rng = stream_rng(1, 0);
        let a: Vec<f64> = (0..n).map(|i| i as f64 / n as f64 + rng.gen_range(-0.5..0.5)).collect();
        g.bench_with_input(BenchmarkId::new("l2", n), &a, |b, a| b.iter(|| isotonic_l2(black_box(a))));
        g.bench_with_input(BenchmarkId::new("l1", n), &a, |b, a| b.iter(|| isotonic_l1(black_box(a))));
    }
    g.finish();
}

fn hilbert(c: &mut Criterion) {
    let points = clustered_2d(100_000, &mut stream_rng(2, 0));
    let cfg = HilbertConfig::new(16, Rect::unit()).unwrap();
    c.bench_function("hilbert_map_100k", |b| b.iter(|| map_dataset(black_box(&points), &cfg).unwrap()));
}

fn publish_reconstruct(c: &mut Criterion) {
    let points = clustered_2d(50_000, &mut stream_rng(3, 0));
    let cfg = HilbertConfig::default();
    c.bench_function("publish_50k_auto", |b| {
        let mut rng = stream_rng(3, 1);
        b.iter(|| publish(black_box(&points), 1.0, GroupSize::Auto, &cfg, Noise::On, &mut rng).unwrap())
    });
    let release = publish(&points, 1.0, GroupSize::Auto, &cfg, Noise::On, &mut stream_rng(3, 2)).unwrap();
    c.bench_function("reconstruct_50k", |b| b.iter(|| geodp::reconstruct(black_box(&release)).unwrap()));
}

fn range_counts(c: &mut Criterion) {
    let points = clustered_2d(50_000, &mut stream_rng(4, 0));
    let cfg = HilbertConfig::default();
    let release = publish(&points, 1.0, GroupSize::Auto, &cfg, Noise::On, &mut stream_rng(4, 1)).unwrap();
    let counter = RangeCounter::from_release(&release).unwrap();
    let q = Rect::new(0.25, 0.3, 0.28125, 0.33125).unwrap();
    c.bench_function("grouped_range_count_1_32", |b| b.iter(|| counter.count(black_box(&q))));
    c.bench_function("wavelet_publish_q9", |b| {
        let mut rng = stream_rng(4, 2);
        b.iter(|| wavelet_publish(black_box(&points), 9, 1.0, &Rect::unit(), Noise::On, &mut rng).unwrap())
    });
}

fn smooth(c: &mut Criterion) {
    let v = uniform_sorted(2_001, &mut stream_rng(5, 0));
    c.bench_function("smooth_sensitivity_2001", |b| b.iter(|| smooth_sensitivity(black_box(&v), 0.1).unwrap()));
}

criterion_group!(benches, pava, hilbert, publish_reconstruct, range_counts, smooth);
criterion_main!(benches);
