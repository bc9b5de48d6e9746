use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use graphmass::comparison::{default_budget, integrate_comparison};
use graphmass::flatnorm::{flat_distance_upper, Ball};
use graphmass::geometry::{Bump, Bumped, RotationalGraph};
use graphmass::levelsets::{h_zero, level_volume};
use graphmass::mass::{adm_mass, LadderOptions};
use graphmass::schwarzschild::{schwarzschild_height, SchwarzschildProfile};
use graphmass::{Dimension, GraphFunction};

fn dim(n: usize) -> Dimension {
    Dimension::new(n).expect("supported dimension")
}

fn schwarzschild(n: usize, m: f64) -> Arc<RotationalGraph> {
    let p = SchwarzschildProfile::new(dim(n), m).expect("positive mass");
    Arc::new(RotationalGraph::new(dim(n), Arc::new(p)).expect("valid profile"))
}

fn bench_height(c: &mut Criterion) {
    let mut g = c.benchmark_group("schwarzschild_height");
    for n in [3, 4, 5, 7] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| schwarzschild_height(dim(n), black_box(1.0), black_box(7.5)).unwrap())
        });
    }
    g.finish();
}

fn bench_level_volume(c: &mut Criterion) {
    let mut g = c.benchmark_group("level_volume");
    g.sample_size(20);
    let round = schwarzschild(3, 1.0);
    g.bench_function("rotational_n3", |b| b.iter(|| level_volume(round.as_ref(), black_box(4.0)).unwrap()));
    let bumped = Bumped::new(round.clone(), Bump { center: vec![4.0, 0.0, 0.0], width: 2.0, amplitude: 2.0 })
        .expect("valid bump");
    g.bench_function("bumped_n3", |b| b.iter(|| level_volume(&bumped, black_box(4.0)).unwrap()));
    g.finish();
}

fn bench_adm_mass(c: &mut Criterion) {
    let mut g = c.benchmark_group("adm_mass");
    g.sample_size(20);
    for n in [3, 5] {
        let f = schwarzschild(n, 1.0);
        g.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| adm_mass(f.as_ref(), &LadderOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn bench_comparison(c: &mut Criterion) {
    let mut g = c.benchmark_group("integrate_comparison");
    for n in 3..=7 {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| integrate_comparison(dim(n), default_budget(dim(n))).unwrap())
        });
    }
    g.finish();
}

fn bench_flat_distance(c: &mut Criterion) {
    let mut g = c.benchmark_group("flat_distance_upper");
    g.sample_size(10);
    for n in [3, 5] {
        let f = schwarzschild(n, 0.25);
        let h0 = h_zero(f.as_ref(), 0.25).unwrap();
        let u = Ball::centered(f.dim(), h0, 4.0).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &(f, h0, u), |b, (f, h0, u)| {
            b.iter(|| flat_distance_upper(f.as_ref(), *h0, u).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_height, bench_level_volume, bench_adm_mass, bench_comparison, bench_flat_distance);
criterion_main!(benches);
