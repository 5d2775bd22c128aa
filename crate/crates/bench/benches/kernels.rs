use std::hint::black_box;

use arrayloc::array::{average_saaf, saaf, uca};
use arrayloc::efim::{
    efim_dynamic_all_unknown, efim_dynamic_known, efim_static_orient_known,
    efim_static_orient_unknown, schur_complement,
};
use arrayloc::geometry::{optimize_anchor_angles, Objective};
use arrayloc::oracle::{numerical_fim, ParameterVector};
use arrayloc::{DynamicMode, StaticMode};
use arrayloc_bench::{moving_scenario, oracle_model, placement, static_scenario};
use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DMatrix;

fn array_kernels(c: &mut Criterion) {
    let a = uca(16, 1.0).unwrap();
    c.bench_function("saaf uca16", |b| {
        b.iter(|| saaf(black_box(&a), black_box(0.7)))
    });
    c.bench_function("average_saaf uca16", |b| {
        b.iter(|| average_saaf(black_box(&a)))
    });
}

fn efim_kernels(c: &mut Criterion) {
    let s = static_scenario(8);
    let m = moving_scenario(8);
    c.bench_function("static far field 8 anchors", |b| {
        b.iter(|| efim_static_orient_known(black_box(&s), StaticMode::FarField).unwrap())
    });
    c.bench_function("static exact 8 anchors", |b| {
        b.iter(|| efim_static_orient_known(black_box(&s), StaticMode::Exact).unwrap())
    });
    c.bench_function("static orientation unknown 8 anchors", |b| {
        b.iter(|| efim_static_orient_unknown(black_box(&s)).unwrap())
    });
    c.bench_function("dynamic narrowband 8 anchors", |b| {
        b.iter(|| efim_dynamic_known(black_box(&m), DynamicMode::Approx).unwrap())
    });
    c.bench_function("dynamic velocity unknown 8 anchors", |b| {
        b.iter(|| efim_dynamic_all_unknown(black_box(&m)).unwrap())
    });
    let j = DMatrix::from_fn(12, 12, |r, k| {
        if r == k {
            12.0
        } else {
            1.0 / (1.0 + (r + k) as f64)
        }
    });
    c.bench_function("schur 12 to 2", |b| {
        b.iter(|| schur_complement(black_box(&j), &[0, 1]).unwrap())
    });
}

fn optimizer(c: &mut Criterion) {
    let p = placement(6);
    c.bench_function("optimize 6 anchors 8 restarts", |b| {
        b.iter(|| optimize_anchor_angles(black_box(&p), Objective::OrientationKnown, 8, 1).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let (model, grid, s) = oracle_model();
    let p = ParameterVector::unknowns(&s);
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    g.bench_function("numerical fim 2 anchors 3 elements", |b| {
        b.iter(|| numerical_fim(&model, &p, &grid).unwrap())
    });
    g.finish();
}

criterion_group!(benches, array_kernels, efim_kernels, optimizer, oracle);
criterion_main!(benches);
