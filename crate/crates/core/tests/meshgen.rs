mod common;

use optri::fields::modulus_estimate;
use optri::meshgen::*;
use optri::norms::{cell_error_unweighted, global_error, UnitWeight};
use optri::quadform::aspect_ratio_bound_check;
use optri::{validate_triangulation, Point2, QuadratureSpec, ScalarField, WeightField};

fn admissible(field: &ScalarField, m: usize, eps: f64, n: usize) -> bool {
    let mf = m as f64;
    2.0 / (mf * mf) * modulus_estimate(field, 1.0 / mf).unwrap() <= eps / n as f64
}

#[test]
fn choose_m_is_the_smallest_admissible() {
    let c = ScalarField::builtin("cosh_sum").unwrap();
    let m = choose_m(&c, 0.5, 10_000).unwrap();
    assert!(m > 1);
    assert!(admissible(&c, m, 0.5, 10_000));
    assert!(!admissible(&c, m - 1, 0.5, 10_000));
    let mut prev = usize::MAX;
    for eps in [0.05, 0.1, 0.2, 0.4, 0.8] {
        let m = choose_m(&c, eps, 4000).unwrap();
        assert!(m <= prev);
        prev = m;
    }
    let q = ScalarField::builtin("quadratic(2,1,0.5)").unwrap();
    for (eps, n) in [(0.01, 100_000), (0.9, 10)] {
        assert_eq!(choose_m(&q, eps, n).unwrap(), 1);
    }
}

#[test]
fn budgets_for_constant_hessian_are_uniform() {
    let f = ScalarField::builtin("paraboloid").unwrap();
    let plan = cell_plans(&f, &WeightField::default(), 1.0, 0.2, 1000).unwrap();
    let lo = plan.cells.iter().map(|c| c.budget).min().unwrap();
    let hi = plan.cells.iter().map(|c| c.budget).max().unwrap();
    assert!(hi - lo <= 1);
}

#[test]
fn budget_accounting_for_cosh() {
    let f = ScalarField::builtin("cosh_sum").unwrap();
    let w = WeightField::from_spec("expr:1 + x").unwrap();
    let (eps, n) = (0.3, 20_000);
    let plan = cell_plans(&f, &w, 2.0, eps, n).unwrap();
    let m2 = plan.m * plan.m;
    assert!(plan.m > 1);
    assert!(plan.cells.iter().all(|c| c.budget >= 1));
    assert!(plan.budget_total() as f64 <= n as f64 * (1.0 - eps) + m2 as f64);
    let doubled = cell_plans(&f, &w.scaled(2.0).unwrap(), 2.0, eps, n).unwrap();
    let a: Vec<usize> = plan.cells.iter().map(|c| c.budget).collect();
    let b: Vec<usize> = doubled.cells.iter().map(|c| c.budget).collect();
    assert_eq!(a, b);
}

#[test]
fn single_cell_tiling_accounting() {
    let f = ScalarField::builtin("paraboloid").unwrap();
    let mut plan = cell_plans(&f, &WeightField::default(), 1.0, 0.2, 100).unwrap();
    plan.cells[0].budget = 8;
    let cm = cell_mesh(&plan.cells[0], 1).unwrap();
    let total: f64 = cm.triangles.iter().map(|t| t.area()).sum();
    assert!((total - 1.0).abs() < 1e-10);
    let full = cm.triangles.iter().filter(|t| (t.area() - 0.125).abs() < 1e-12).count();
    assert!(full >= 2 && full <= 8, "{full} full-size triangles");
    assert!(cm.triangles.iter().all(|t| t.area() <= 0.125 + 1e-12));
}

#[test]
fn cell_triangles_obey_diameter_bound() {
    let f = ScalarField::builtin("quadratic(9,1,0.5)").unwrap();
    let plan = cell_plans(&f, &WeightField::default(), 1.0, 0.2, 2000).unwrap();
    let cell = &plan.cells[0];
    let bound = aspect_ratio_bound_check(&cell.form()).unwrap().bound;
    let scale = (1.0 / (plan.m * plan.m * cell.budget) as f64).sqrt();
    let cm = cell_mesh(cell, plan.m).unwrap();
    for t in &cm.triangles {
        assert!(t.area() <= scale * scale * (1.0 + 1e-10));
        assert!(t.diameter() <= bound * scale * (1.0 + 1e-10));
    }
}

#[test]
fn cosh_mesh_glues_conformingly() {
    let f = ScalarField::builtin("cosh_sum").unwrap();
    let (mesh, plan) = build_mesh(&f, &WeightField::default(), 2.0, 2000, 0.2).unwrap();
    assert!(plan.m > 1);
    let r = validate_triangulation(&mesh);
    assert!(r.is_valid(), "{}", r.summary());
    assert_eq!(r.hanging_vertices.len(), 0);
    assert!((mesh.total_area() - 1.0).abs() < 1e-10);
    assert!(mesh.vertices.iter().all(|v| (0.0..=1.0).contains(&v.x) && (0.0..=1.0).contains(&v.y)));
    assert_eq!(plan.n1, mesh.len());
}

#[test]
fn small_paraboloid_mesh_count() {
    let f = ScalarField::builtin("paraboloid").unwrap();
    let (mesh, _) = build_mesh(&f, &WeightField::default(), 1.0, 100, 0.3).unwrap();
    assert!(validate_triangulation(&mesh).is_valid());
    assert!(mesh.len() >= 30 && mesh.len() <= 130, "{}", mesh.len());
}

#[test]
fn error_falls_as_n_doubles() {
    let spec = QuadratureSpec::default();
    for name in ["paraboloid", "cosh_sum"] {
        let f = ScalarField::builtin(name).unwrap();
        let mut prev = f64::INFINITY;
        for n in [250, 500, 1000, 2000] {
            let (mesh, _) = build_mesh(&f, &WeightField::default(), 1.0, n, 0.2).unwrap();
            let e = global_error(&f, &mesh, 1.0, &UnitWeight, &spec).unwrap().value;
            assert!(e < prev, "{name} N={n}");
            prev = e;
        }
    }
}

#[test]
fn uniform_meshes() {
    for n in [2, 3, 8, 50, 251, 1000] {
        let m = uniform_mesh(n).unwrap();
        let k = ((n / 2) as f64).sqrt().floor() as usize;
        assert_eq!(m.len(), 2 * k * k);
        assert!(validate_triangulation(&m).is_valid());
    }
}

#[test]
fn adaptive_beats_uniform_on_paraboloid() {
    let f = ScalarField::builtin("paraboloid").unwrap();
    let spec = QuadratureSpec::default();
    for n in [250, 1000, 4000] {
        let (mesh, _) = build_mesh(&f, &WeightField::default(), 1.0, n, 0.2).unwrap();
        let a = mesh.len() as f64 * global_error(&f, &mesh, 1.0, &UnitWeight, &spec).unwrap().value;
        let u = uniform_mesh(n).unwrap();
        let b = u.len() as f64 * global_error(&f, &u, 1.0, &UnitWeight, &spec).unwrap().value;
        assert!(a < b, "N={n}: adaptive {a} vs uniform {b}");
    }
}

#[test]
fn interior_triangles_share_one_error() {
    let f = ScalarField::builtin("paraboloid").unwrap();
    let (mesh, plan) = build_mesh(&f, &WeightField::default(), 1.0, 400, 0.2).unwrap();
    assert_eq!(plan.m, 1);
    let target = 1.0 / plan.cells[0].budget as f64;
    let g = |q: Point2| q.x * q.x + q.y * q.y;
    let errs: Vec<f64> = mesh
        .iter_triangles()
        .filter(|t| (t.area() - target).abs() < 1e-12 * target.max(1.0))
        .map(|t| cell_error_unweighted(&g, &t, 1.0).unwrap())
        .collect();
    assert!(errs.len() > 100);
    let e0 = errs[0];
    assert!(errs.iter().all(|e| (e - e0).abs() <= 1e-6 * e0));
}

#[test]
fn plan_round_trips_through_json() {
    let f = ScalarField::builtin("cosh_sum").unwrap();
    let (_, plan) = build_mesh(&f, &WeightField::default(), 1.0, 500, 0.2).unwrap();
    let back: MeshPlan = serde_json::from_str(&plan.to_json().unwrap()).unwrap();
    assert_eq!(back, plan);
}
