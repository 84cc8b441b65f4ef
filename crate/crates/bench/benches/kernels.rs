use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use optri::constants::{c_p_plus, optimize_shape};
use optri::meshgen::{build_mesh, cell_mesh, cell_plans, glue};
use optri::norms::{cell_error_unweighted, global_error, UnitWeight};
use optri::{QuadraticForm, QuadratureSpec, ScalarField, Triangle, WeightField};

fn constants(c: &mut Criterion) {
    c.bench_function("c_p_plus p=2.5", |b| b.iter(|| c_p_plus(black_box(2.5)).unwrap()));
    c.bench_function("shape scan p=1 grid=60", |b| b.iter(|| optimize_shape(black_box(1.0), 60).unwrap()));
}

fn cell_errors(c: &mut Criterion) {
    let t = Triangle::from_coords([[0.0, 0.0], [0.9, 0.1], [0.2, 0.7]]);
    let q = QuadraticForm::new(3.0, 1.0, 0.4);
    for p in [1.0, 2.5] {
        c.bench_function(&format!("cell error p={p}"), |b| b.iter(|| cell_error_unweighted(&q, black_box(&t), p).unwrap()));
    }
}

fn meshing(c: &mut Criterion) {
    let f = ScalarField::builtin("cosh_sum").unwrap();
    let w = WeightField::default();
    let mut g = c.benchmark_group("mesh");
    g.sample_size(10);
    g.bench_function("build cosh N=4000", |b| b.iter(|| build_mesh(&f, &w, 2.0, black_box(4000), 0.2).unwrap()));

    let plan = cell_plans(&f, &w, 2.0, 0.2, 4000).unwrap();
    let cells: Vec<_> = plan.cells.iter().map(|c| cell_mesh(c, plan.m).unwrap()).collect();
    g.bench_function("glue cosh N=4000", |b| b.iter(|| glue(black_box(&cells), plan.m).unwrap()));

    let (mesh, _) = build_mesh(&f, &w, 2.0, 4000, 0.2).unwrap();
    let spec = QuadratureSpec::default();
    g.bench_function("global error cosh N=4000", |b| {
        b.iter(|| global_error(&f, black_box(&mesh), 2.0, &UnitWeight, &spec).unwrap())
    });
    g.finish();
}

criterion_group!(benches, constants, cell_errors, meshing);
criterion_main!(benches);
