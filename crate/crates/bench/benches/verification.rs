//! Benchmarks of the grid checkers and the orbit integrator at the default
//! verification sizes.

use criterion::{criterion_group, criterion_main, Criterion};
use reeb_core::construct::{glue_open_book, GlueConfig};
use reeb_core::manifold::{builtin_carriere, builtin_t3_contact, builtin_trivial_open_book, Grid};
use reeb_core::verify::{is_contact, is_presymplectic, orbit_integral, OrbitOptions, Tolerances};
use std::hint::black_box;

fn checkers(c: &mut Criterion) {
    let tol = Tolerances::default();

    c.bench_function("is_contact_t3_16", |b| {
        let t3 = builtin_t3_contact();
        let grid = Grid::uniform(3, 16);
        b.iter(|| black_box(is_contact(&t3.alpha, &t3.complex, &grid, &tol).unwrap()))
    });

    c.bench_function("is_presymplectic_dalpha1_16", |b| {
        let m = builtin_carriere([[2, 1], [1, 1]]).unwrap();
        let d1 = m.alpha1.exterior_derivative().unwrap();
        let grid = Grid::uniform(3, 16);
        b.iter(|| black_box(is_presymplectic(&d1, &m.complex, &grid, &tol).unwrap()))
    });

    c.bench_function("glue_open_book_12", |b| {
        let ob = builtin_trivial_open_book();
        let grid = Grid::uniform(3, 12);
        b.iter(|| black_box(glue_open_book(&ob, &GlueConfig::default(), &grid, &tol).unwrap()))
    });

    c.bench_function("orbit_circle_return", |b| {
        let ob = builtin_trivial_open_book();
        let glued =
            glue_open_book(&ob, &GlueConfig::default(), &Grid::uniform(3, 8), &tol).unwrap();
        let opts = OrbitOptions::default();
        b.iter(|| {
            black_box(
                orbit_integral(
                    &glued.v_tube,
                    &glued.eta_tube,
                    &[0.0, 0.95, 0.0],
                    &ob.complex,
                    &opts,
                )
                .unwrap(),
            )
        })
    });
}

criterion_group!(benches, checkers);
criterion_main!(benches);
