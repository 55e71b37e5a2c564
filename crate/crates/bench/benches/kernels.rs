use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use sobolev_core::cylinder::{period, period_by_integration, t_star, u0, CylinderParams, HillOperator};
use sobolev_core::duality::FiniteOperator;
use sobolev_core::specialfn::gauss_rule;
use sobolev_core::stability::distance;
use sobolev_core::zonal::{SphereParams, ZonalFn};

fn quadrature(c: &mut Criterion) {
    let mut g = c.benchmark_group("gauss_rule");
    for n in [64usize, 256] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| gauss_rule(black_box(n), 0.5).unwrap())
        });
    }
    g.finish();
}

fn zonal(c: &mut Criterion) {
    let p = SphereParams::new(3, 1.0).unwrap();
    let r = ZonalFn::harmonic(p, 2, 16, 64).unwrap();
    let u = r.resampled(vec![1.0; r.samples.len()]).unwrap().lincomb(1.0, &r, 0.05).unwrap();
    c.bench_function("distance_d3", |b| b.iter(|| distance(black_box(&u)).unwrap()));
}

fn period_map(c: &mut Criterion) {
    let a = u0(3).unwrap() + 0.1;
    c.bench_function("period_quadrature", |b| b.iter(|| period(3, black_box(a)).unwrap()));
    c.bench_function("period_ode", |b| b.iter(|| period_by_integration(3, black_box(a)).unwrap()));
}

fn hill(c: &mut Criterion) {
    let p = CylinderParams::new(3, 1.45 * t_star(3)).unwrap();
    let mut g = c.benchmark_group("hill_spectrum");
    g.sample_size(20);
    for k in [32usize, 128] {
        let op = HillOperator::new(p, k).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(k), &op, |b, op| b.iter(|| op.spectrum(0).unwrap()));
    }
    g.finish();
}

fn duality(c: &mut Criterion) {
    let a = DMatrix::from_fn(8, 8, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.5);
    c.bench_function("operator_norm_8x8_q6", |b| b.iter(|| FiniteOperator::new(black_box(a.clone()), 6.0, 1).unwrap()));
}

criterion_group!(benches, quadrature, zonal, period_map, hill, duality);
criterion_main!(benches);
