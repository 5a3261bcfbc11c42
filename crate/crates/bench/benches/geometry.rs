use std::hint::black_box;

use caplab_core::covering::vitali_select;
use caplab_core::geometry::{chord_length, integrate};
use caplab_core::{rng, Capsule, QuadratureSpec, Vec3};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::Rng;

fn family(n: usize) -> Vec<Capsule> {
    let mut r = rng(7);
    (0..n)
        .map(|_| {
            let radius = r.random_range(0.5..2.0);
            let c = Vec3::new(
                r.random_range(-10.0..10.0),
                r.random_range(-10.0..10.0),
                r.random_range(-10.0..10.0),
            );
            let e = Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), 1.0).normalize();
            Capsule::new(c, radius, radius * r.random_range(1.0..4.0), e).unwrap()
        })
        .collect()
}

fn capsules(c: &mut Criterion) {
    let fam = family(1000);
    c.bench_function("capsule_intersects", |b| {
        b.iter(|| fam[0].intersects(black_box(&fam[1])))
    });
    c.bench_function("chord_length", |b| {
        b.iter(|| chord_length(1.0, 3.0, black_box(&Vec3::new(2.5, 0.3, 0.1))))
    });
    let cap = Capsule::new(Vec3::zeros(), 1.0, 5.0, Vec3::x()).unwrap();
    let q = QuadratureSpec::Gauss { order: 10 };
    c.bench_function("integrate_gauss10", |b| {
        b.iter(|| integrate(&cap, |y: &Vec3| (-y.norm_squared()).exp(), black_box(&q)).unwrap())
    });
    c.bench_function("vitali_select_1000", |b| {
        b.iter_batched(|| fam.clone(), |f| vitali_select(&f), BatchSize::LargeInput)
    });
}

criterion_group!(benches, capsules);
criterion_main!(benches);
