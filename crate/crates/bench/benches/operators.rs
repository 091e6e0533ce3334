//! Microbenchmarks of the symbolic operator kernels: wedge, exterior
//! derivative, pullback and compiled grid evaluation on the mapping-torus
//! forms.

use criterion::{criterion_group, criterion_main, Criterion};
use reeb_core::manifold::{builtin_carriere, Grid};
use std::hint::black_box;

fn operators(c: &mut Criterion) {
    let m = builtin_carriere([[2, 1], [1, 1]]).unwrap();
    let d1 = m.alpha1.exterior_derivative().unwrap();

    c.bench_function("exterior_derivative_alpha1", |b| {
        b.iter(|| black_box(m.alpha1.exterior_derivative().unwrap()))
    });

    c.bench_function("wedge_alpha1_dalpha1", |b| {
        b.iter(|| black_box(m.alpha1.wedge(&d1).unwrap()))
    });

    c.bench_function("pullback_monodromy_alpha1", |b| {
        let map = m
            .complex
            .identifications()
            .iter()
            .find(|f| f.name == "monodromy")
            .unwrap();
        b.iter(|| black_box(map.pullback(&m.alpha1).unwrap()))
    });

    c.bench_function("compiled_grid_sweep_dalpha1_16", |b| {
        let compiled = d1.compile(&m.complex.params).unwrap();
        let points = Grid::uniform(3, 16).points(&m.chart);
        b.iter(|| {
            let mut acc = 0.0;
            for p in &points {
                acc += compiled.max_abs_at(p);
            }
            black_box(acc)
        })
    });
}

criterion_group!(benches, operators);
criterion_main!(benches);
