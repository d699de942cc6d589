use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use isac_core::bounds::{alpha_atbcrb, atbcrb_finite};
use isac_core::montecarlo::{empirical_mse, map_from_statistic};
use isac_core::rate::gaussian_mixture_entropy;
use isac_core::region::sweep_tradeoff;
use isac_core::{Estimator, FisherProfile, Modulation, SimConfig, Sweep, TwoBandModel};

fn model() -> TwoBandModel {
    TwoBandModel::symmetric(3.0, 2.0, 0.5, Modulation::Bpsk).unwrap()
}

fn bounds(c: &mut Criterion) {
    let m = model();
    let p = FisherProfile::new(&m, m.prior(), m.design(0.3).unwrap()).unwrap();
    c.bench_function("alpha_atbcrb", |b| b.iter(|| alpha_atbcrb(black_box(&p)).unwrap()));
    c.bench_function("atbcrb_finite n=1000", |b| b.iter(|| atbcrb_finite(black_box(&p), 1000).unwrap()));
}

fn rate(c: &mut Criterion) {
    let a = 2f64.sqrt();
    c.bench_function("bpsk mixture entropy", |b| {
        b.iter(|| gaussian_mixture_entropy(&[0.5, 0.5], black_box(&[-a, a]), 0.5).unwrap())
    });
    let m = model();
    let sweep = Sweep { t_min: 0.01, t_max: 0.99, steps: 99 };
    c.bench_function("region sweep 99", |b| b.iter(|| sweep_tradeoff(black_box(&m), sweep).unwrap()));
}

fn estimation(c: &mut Criterion) {
    let m = model();
    c.bench_function("map_from_statistic", |b| {
        b.iter(|| map_from_statistic(m.prior(), black_box(870.0), 1000, 0.5).unwrap())
    });
    let cfg = SimConfig {
        model: m,
        t1: 0.0,
        estimator: Estimator::Map,
        n_list: vec![1000],
        trials: 2000,
        seed: 1,
        fast_path: true,
        workers: None,
    };
    let mut group = c.benchmark_group("montecarlo");
    group.sample_size(10);
    group.bench_function("empirical_mse 2000 trials", |b| b.iter(|| empirical_mse(black_box(&cfg)).unwrap()));
    group.finish();
}

criterion_group!(benches, bounds, rate, estimation);
criterion_main!(benches);
