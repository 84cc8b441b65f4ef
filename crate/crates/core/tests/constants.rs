mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

use common::{cp_reference, rel, CP_REFERENCE};
use optri::constants::*;
use optri::norms::cell_error_unweighted;
use optri::{Point2, QuadraticForm, Triangle};
use proptest::prelude::*;

#[test]
fn closed_forms_match_reference_table() {
    for (p, want) in CP_REFERENCE {
        let a = c_p_arccos(p).unwrap();
        let b = c_p_beta(p).unwrap();
        assert!(rel(a, want) < 1e-10, "arccos form at p={p}: {a} vs {want}");
        assert!(rel(b, want) < 1e-10, "beta form at p={p}: {b} vs {want}");
        assert!(rel(a, b) < 1e-10);
    }
}

#[test]
fn quadrature_form_within_1e6() {
    for (p, want) in CP_REFERENCE {
        let cp = c_p_plus(p).unwrap();
        assert!(rel(cp.value_quadrature, want) < 1e-6, "p={p}");
        assert!(cp.max_rel_discrepancy() < 1e-6);
    }
}

#[test]
fn c1_equals_equilateral_cell_error() {
    let t = optri::geometry::make_equilateral(Point2::new(0.3, -0.2), 1.0, 0.4).unwrap();
    let d = cell_error_unweighted(&QuadraticForm::unit(), &t, 1.0).unwrap();
    assert!(rel(d, c_p_plus(1.0).unwrap().value) < 1e-8);
}

#[test]
fn gamma_positive_and_decreasing() {
    let mut prev = f64::INFINITY;
    for k in 1..=50 {
        let p = 0.1 * k as f64;
        let g = gamma_p(p).unwrap();
        assert!(g > 0.0 && g < prev, "p={p}");
        prev = g;
    }
}

#[test]
fn gamma_is_the_sine_power_integral_normalization() {
    // l(π/2) = γ ∫₀^{π/2} sin^{2p+2}, and l(π/2) = π/(4p+4)
    for p in [0.3, 1.0, 2.5] {
        let n = 20_000;
        let h = FRAC_PI_2 / n as f64;
        let integral: f64 = (0..n).map(|k| ((k as f64 + 0.5) * h).sin().powf(2.0 * p + 2.0) * h).sum();
        assert!(rel(gamma_p(p).unwrap() * integral, PI / (4.0 * p + 4.0)) < 1e-7);
    }
}

#[test]
fn incomplete_beta_against_reference() {
    // 25-digit reference for B(3/4; 5/2, 1/2)
    let got = incomplete_beta(0.75, 2.5, 0.5).unwrap();
    assert!((got - 0.298_258_873_768_701_57).abs() < 1e-10, "{got}");
}

#[test]
fn l_derivative_matches_sine_power() {
    let d = 1e-4;
    for p in [0.25, 1.0, 3.0] {
        let g = gamma_p(p).unwrap();
        for k in 1..20 {
            let a = k as f64 * PI / 20.0;
            let fd = (l_of_a(a + d, p).unwrap() - l_of_a(a - d, p).unwrap()) / (2.0 * d);
            let exact = g * a.sin().powf(2.0 * p + 2.0);
            assert!((fd - exact).abs() < 1e-7, "p={p} A={a}: {fd} vs {exact}");
        }
    }
}

#[test]
fn m_matches_sector_triangle_quadrature() {
    // ∫(1 - x² - y²) over (0,0), (cos π/3, ∓sin π/3), 25-digit reference
    let got = m_sector(FRAC_PI_3, 1.0, 1.0).unwrap();
    assert!((got - 0.324_759_526_419_164_5).abs() < 1e-10, "{got}");
}

#[test]
fn m_tends_to_zero_with_the_angle() {
    let mut prev = f64::INFINITY;
    for k in 1..8 {
        let a = 10f64.powi(-k);
        let m = m_sector(a, 1.0, 1.5).unwrap();
        assert!(m < prev && m > 0.0);
        prev = m;
    }
    assert!(prev < 1e-6);
}

#[test]
fn right_isosceles_against_cell_quadrature() {
    let s = 2f64.sqrt();
    let t = Triangle::from_coords([[0.0, 0.0], [s, 0.0], [0.0, s]]);
    for p in [0.5, 1.0, 2.0] {
        let q = cell_error_unweighted(&QuadraticForm::unit(), &t, p).unwrap();
        let d = d_unit_area(FRAC_PI_4, FRAC_PI_4, p).unwrap();
        assert!(rel(d, q) < 1e-7, "p={p}: {d} vs {q}");
    }
}

fn triangle_with_angles(a: f64, b: f64) -> Triangle {
    // base (0,0)-(1,0), apex from the two base angles
    let x = b.tan() / (a.tan() + b.tan());
    let t = Triangle::from_coords([[0.0, 0.0], [1.0, 0.0], [x, x * a.tan()]]);
    common::with_area(&t, 1.0)
}

#[test]
fn thin_triangles_against_cell_quadrature() {
    for (a, b, p) in [(0.05, 0.05, 3.0), (0.02, 0.3, 2.0), (0.3, 1.2, 0.5), (0.1, 1.5, 1.0)] {
        let q = cell_error_unweighted(&QuadraticForm::unit(), &triangle_with_angles(a, b), p).unwrap();
        let d = d_unit_area(a, b, p).unwrap();
        assert!(rel(d, q) < 1e-7, "({a}, {b}, {p}): {d} vs {q}");
    }
}

#[test]
fn z_at_equilateral_and_stationary() {
    for p in [0.5, 1.0, 2.0] {
        let cp = cp_reference(p);
        let z = z_objective(FRAC_PI_3, FRAC_PI_3, p).unwrap();
        assert!(rel(z, cp.powf(p) / 2f64.powf(p + 2.0)) < 1e-9);
        let h = 1e-4;
        let da = (z_objective(FRAC_PI_3 + h, FRAC_PI_3, p).unwrap() - z_objective(FRAC_PI_3 - h, FRAC_PI_3, p).unwrap())
            / (2.0 * h);
        assert!(da.abs() < 1e-7, "p={p}: dZ/dA = {da}");
    }
}

#[test]
fn profiles_on_200_point_grids() {
    let n = 200;
    let h = FRAC_PI_4 / n as f64;
    for p in [0.5, 1.0, 2.0, 3.0] {
        let low: Vec<f64> = (1..=n).map(|k| (k as f64 * h).min(FRAC_PI_4)).collect();
        for kind in [ProfileKind::L, ProfileKind::STilde] {
            let v: Vec<f64> = low.iter().map(|&a| appendix_profile(kind, a, p).unwrap()).collect();
            assert!(v.windows(2).all(|w| w[1] <= w[0]), "{kind:?} p={p}");
        }
        let high: Vec<f64> = (0..n).map(|k| FRAC_PI_4 + k as f64 * h).collect();
        let s: Vec<f64> = high.iter().map(|&a| appendix_profile(ProfileKind::S, a, p).unwrap()).collect();
        let imin = (0..n).min_by(|&i, &j| s[i].total_cmp(&s[j])).unwrap();
        assert!((high[imin] - FRAC_PI_3).abs() <= h, "p={p}: S minimum at {}", high[imin]);
        let l_quarter = appendix_profile(ProfileKind::L, FRAC_PI_4, p).unwrap();
        assert!(low.iter().all(|&a| appendix_profile(ProfileKind::L, a, p).unwrap() >= l_quarter));
        assert!(q_at_quarter_pi(p).unwrap() <= 0.0);
    }
}

#[test]
fn propositions_for_small_p() {
    for k in 1..=9 {
        let p = 0.1 * k as f64;
        let one = z_sign_scan(Proposition::One, p, 10_000).unwrap();
        assert!(one.max_value <= 1e-12, "p={p}: {}", one.max_value);
        let two = z_sign_scan(Proposition::Two, p, 10_000).unwrap();
        assert_eq!(two.sign_changes.len(), 1, "p={p}");
        let [lo, hi] = two.sign_changes[0];
        assert!(lo > 0.0 && hi < 1.0);
    }
    let p = 0.5;
    assert!((Proposition::One.eval(0.0, p) + p).abs() < 1e-15);
    assert!(Proposition::One.eval(1.0, p).abs() < 1e-12);
}

#[test]
fn shape_scan_for_half_and_one() {
    for p in [0.5, 1.0] {
        let r = optimize_shape(p, 120).unwrap();
        assert!((r.a_star - FRAC_PI_3).abs() <= r.refined_step, "p={p}");
        assert!((r.b_star - FRAC_PI_3).abs() <= r.refined_step, "p={p}");
        assert!(rel(r.min_value, cp_reference(p)) < 1e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn d_is_symmetric(a in 0.1f64..1.4, b in 0.1f64..1.4, p in 0.3f64..4.0) {
        prop_assume!(a + b < PI - 0.1);
        let x = d_unit_area(a, b, p).unwrap();
        let y = d_unit_area(b, a, p).unwrap();
        prop_assert!(rel(x, y) < 1e-12);
    }

    #[test]
    fn z_is_symmetric(a in 0.6f64..1.5, b in 0.6f64..1.5, p in 0.3f64..4.0) {
        prop_assume!(a + b > FRAC_PI_2 + 0.01);
        let x = z_objective(a, b, p).unwrap();
        let y = z_objective(b, a, p).unwrap();
        prop_assert!(rel(x, y) < 1e-12);
    }

    #[test]
    fn m_scales_with_radius(a in 0.05f64..1.5, r in 0.2f64..3.0, p in 0.3f64..4.0) {
        let m1 = m_sector(a, r, p).unwrap();
        let m2 = m_sector(a, 2.0 * r, p).unwrap();
        prop_assert!(rel(m2, 2f64.powf(2.0 * p + 2.0) * m1) < 1e-12);
    }

    #[test]
    fn complete_and_trivial_incomplete_beta(a in 0.2f64..6.0, b in 0.2f64..6.0, x in 0.0f64..1.0) {
        prop_assert!(rel(incomplete_beta(1.0, a, b).unwrap(), beta(a, b).unwrap()) < 1e-10);
        prop_assert!((incomplete_beta(x, 1.0, 1.0).unwrap() - x).abs() < 1e-12);
    }

    #[test]
    fn non_equilateral_shapes_exceed_constant(a in 0.2f64..1.4, b in 0.2f64..1.4) {
        prop_assume!(a + b < PI - 0.2);
        prop_assume!((a - FRAC_PI_3).abs() + (b - FRAC_PI_3).abs() > 0.05);
        let d = d_unit_area(a, b, 1.0).unwrap();
        prop_assert!(d > cp_reference(1.0));
    }
}
