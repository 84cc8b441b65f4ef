mod common;

use std::f64::consts::PI;

use common::random_triangle;
use optri::geometry::{clip_to_cell, make_equilateral, tile_region, triangle_metrics};
use optri::meshgen::build_mesh;
use optri::{validate_triangulation, Point2, ScalarField, Square, Triangle, WeightField};
use proptest::prelude::*;

fn tri(c: [f64; 6]) -> Triangle {
    Triangle::from_coords([[c[0], c[1]], [c[2], c[3]], [c[4], c[5]]])
}

#[test]
fn unit_area_equilateral_side() {
    let t = make_equilateral(Point2::new(0.0, 0.0), 1.0, 0.0).unwrap();
    let s = 2.0 / 3f64.powf(0.25);
    for l in t.side_lengths() {
        assert!((l - s).abs() < 1e-12);
    }
    let m = triangle_metrics(&t).unwrap();
    assert!((m.circumradius - s / 3f64.sqrt()).abs() < 1e-12);
    assert!((m.area - 1.0).abs() < 1e-12);
}

#[test]
fn tiling_covers_every_grid_point() {
    let cell = Square::from_bounds(0.25, 0.5, 0.75, 1.0);
    let t = make_equilateral(Point2::new(0.3, 0.4), 0.004, 0.7).unwrap();
    let tiles = tile_region(&t, &cell).unwrap();
    let total: f64 = tiles.iter().map(|t| t.area()).sum();
    assert!(total >= cell.area());
    for i in 0..100 {
        for j in 0..100 {
            let p = Point2::new(cell.x0 + cell.width() * i as f64 / 99.0, cell.y0 + cell.height() * j as f64 / 99.0);
            assert!(tiles.iter().any(|t| t.contains(p, 1e-12)), "{p:?} not covered");
        }
    }
}

#[test]
fn paraboloid_mesh_is_valid() {
    let f = ScalarField::builtin("paraboloid").unwrap();
    let (mesh, _) = build_mesh(&f, &WeightField::default(), 1.0, 500, 0.2).unwrap();
    let r = validate_triangulation(&mesh);
    assert!(r.is_valid(), "{}", r.summary());
    assert_eq!(r.conformity_violations(), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn metrics_are_consistent(c in prop::array::uniform6(-2.0f64..2.0)) {
        let t = tri(c);
        prop_assume!(t.area() > 1e-3);
        let m = triangle_metrics(&t).unwrap();
        prop_assert!((m.area - 0.5 * m.diameter * m.min_height).abs() < 1e-10);
        for v in t.vertices() {
            prop_assert!((v.dist(m.circumcenter) - m.circumradius).abs() < 1e-9 * m.circumradius.max(1.0));
        }
    }

    #[test]
    fn metrics_invariant_under_rotation(c in prop::array::uniform6(-2.0f64..2.0), angle in 0.0f64..(2.0 * PI)) {
        let t = tri(c);
        prop_assume!(t.area() > 1e-3);
        let a = triangle_metrics(&t).unwrap();
        let b = triangle_metrics(&t.map(|v| v.rotated(angle))).unwrap();
        prop_assert!((a.area - b.area).abs() < 1e-12);
        prop_assert!((a.diameter - b.diameter).abs() < 1e-12);
        prop_assert!((a.min_height - b.min_height).abs() < 1e-12);
        prop_assert!((a.circumradius - b.circumradius).abs() < 1e-9 * a.circumradius.max(1.0));
    }

    #[test]
    fn clipped_tiling_partitions_cell(seed in 0u64..1000, x0 in 0.0f64..0.5, y0 in 0.0f64..0.5, side in 0.1f64..0.5) {
        let mut rng = common::rng(seed);
        let shape = random_triangle(&mut rng, 0.3);
        let t = common::with_area(&shape, side * side / 30.0);
        let cell = Square::new(x0, y0, side);
        let tiles = tile_region(&t, &cell).unwrap();
        let clip = clip_to_cell(&tiles, &cell).unwrap();
        prop_assert!((clip.total_area() - cell.area()).abs() < 1e-10);
        for t in clip.triangles() {
            prop_assert!(t.vertices().iter().all(|&v| cell.contains(v, 1e-12)));
        }
        for v in &clip.boundary_vertices {
            prop_assert!(cell.on_boundary(*v, 1e-12));
        }
    }
}
