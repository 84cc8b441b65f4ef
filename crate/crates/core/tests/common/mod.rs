#![allow(dead_code)]

use optri::{Point2, QuadraticForm, Triangle};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// C_p⁺ to 13 digits, from a 30-digit nested 1D quadrature of
/// ∫(1 - x² - y²)^p over the equilateral triangle inscribed in the unit
/// circle.
pub const CP_REFERENCE: [(f64, f64); 6] = [
    (0.25, 0.557_217_380_349_838),
    (0.5, 0.564_741_159_462_899),
    (1.0, 0.577_350_269_189_626),
    (2.0, 0.596_284_793_999_944),
    (3.0, 0.610_262_711_959_781),
    (5.0, 0.630_362_801_332_373),
];

pub fn cp_reference(p: f64) -> f64 {
    CP_REFERENCE.iter().find(|(q, _)| *q == p).expect("p not in table").1
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// A triangle in [-1, 1]² whose smallest angle is at least `min_angle`.
pub fn random_triangle(rng: &mut StdRng, min_angle: f64) -> Triangle {
    loop {
        let mut pt = || Point2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let t = Triangle::new(pt(), pt(), pt());
        if t.area() > 1e-3 && smallest_angle(&t) >= min_angle {
            return t;
        }
    }
}

pub fn smallest_angle(t: &Triangle) -> f64 {
    let v = t.vertices();
    (0..3)
        .map(|k| {
            let (a, b, c) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
            let (u, w) = (b - a, c - a);
            u.cross(w).abs().atan2(u.dot(w))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Rescales `t` about its centroid to area `area`.
pub fn with_area(t: &Triangle, area: f64) -> Triangle {
    let c = t.centroid();
    let s = (area / t.area()).sqrt();
    t.map(|v| Point2::new(c.x + s * (v.x - c.x), c.y + s * (v.y - c.y)))
}

/// SPD form with coefficients in a moderate box.
pub fn random_spd(rng: &mut StdRng) -> QuadraticForm {
    loop {
        let a = rng.random_range(0.2..5.0);
        let b = rng.random_range(0.2..5.0);
        let c = rng.random_range(-2.0..2.0);
        if a * b - c * c > 0.05 {
            return QuadraticForm::new(a, b, c);
        }
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
