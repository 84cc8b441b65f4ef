//! Planar primitives: points, triangles, axis-aligned cells, lattice tilings
//! and conforming triangulations of a square domain.

mod clip;
mod mesh;

pub use clip::{clip_to_cell, tile_region, triangulate_polygon, ClipResult, Polygon};
pub use mesh::{validate_triangulation, Triangulation, ValidityReport};

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for merging points and on-edge classification.
/// The working domain is the unit square, so a fixed absolute scale is safe.
pub const GEOM_TOL: f64 = 1e-12;

/// Clipped pieces smaller than this are dropped.
pub const DISCARD_AREA: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn midpoint(self, o: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    pub fn rotated(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Lexicographic (x, then y) comparison.
    pub fn lex_cmp(&self, o: &Point2) -> std::cmp::Ordering {
        self.x.total_cmp(&o.x).then(self.y.total_cmp(&o.y))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// `2 × signed area` of the triangle `abc`; positive when counter-clockwise.
pub fn orient2d(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub a: Point2,
    pub b: Point2,
    pub c: Point2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleMetrics {
    pub area: f64,
    /// Length of the longest side.
    pub diameter: f64,
    /// Smallest of the three heights, `2|T| / diam T`.
    pub min_height: f64,
    pub circumcenter: Point2,
    pub circumradius: f64,
}

impl Triangle {
    pub const fn new(a: Point2, b: Point2, c: Point2) -> Self {
        Self { a, b, c }
    }

    pub fn from_coords(coords: [[f64; 2]; 3]) -> Self {
        let [a, b, c] = coords.map(|[x, y]| Point2::new(x, y));
        Self { a, b, c }
    }

    pub fn vertices(&self) -> [Point2; 3] {
        [self.a, self.b, self.c]
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * orient2d(self.a, self.b, self.c)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Point2 {
        Point2::new(
            (self.a.x + self.b.x + self.c.x) / 3.0,
            (self.a.y + self.b.y + self.c.y) / 3.0,
        )
    }

    pub fn side_lengths(&self) -> [f64; 3] {
        [self.b.dist(self.c), self.c.dist(self.a), self.a.dist(self.b)]
    }

    pub fn diameter(&self) -> f64 {
        let [x, y, z] = self.side_lengths();
        x.max(y).max(z)
    }

    pub fn is_degenerate(&self) -> bool {
        let d = self.diameter();
        let area = self.area();
        !(area.is_finite() && d.is_finite()) || area <= 1e-14 * d * d || area == 0.0
    }

    /// Same vertex set, counter-clockwise order.
    pub fn ccw(&self) -> Triangle {
        if self.signed_area() < 0.0 {
            Triangle::new(self.a, self.c, self.b)
        } else {
            *self
        }
    }

    pub fn translated(&self, by: Point2) -> Triangle {
        Triangle::new(self.a + by, self.b + by, self.c + by)
    }

    pub fn map(&self, f: impl Fn(Point2) -> Point2) -> Triangle {
        Triangle::new(f(self.a), f(self.b), f(self.c))
    }

    /// Point reflection through the midpoint of side `k` (the side opposite
    /// vertex `k`). Together with `self` this forms a parallelogram.
    pub fn reflected_across_side(&self, k: usize) -> Triangle {
        let v = self.vertices();
        let (p, q, r) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
        Triangle::new(q + r - p, r, q)
    }

    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        let t = self.ccw();
        let scale = t.diameter().max(1.0);
        let e = -tol * scale;
        orient2d(t.a, t.b, p) >= e && orient2d(t.b, t.c, p) >= e && orient2d(t.c, t.a, p) >= e
    }

    pub fn metrics(&self) -> Result<TriangleMetrics> {
        if self.is_degenerate() {
            return Err(Error::DegenerateTriangle { area: self.area() });
        }
        let area = self.area();
        let diameter = self.diameter();
        // Circumcenter in coordinates relative to `a` for accuracy.
        let b = self.b - self.a;
        let c = self.c - self.a;
        let d = 2.0 * b.cross(c);
        let bb = b.dot(b);
        let cc = c.dot(c);
        let rel = Point2::new((c.y * bb - b.y * cc) / d, (b.x * cc - c.x * bb) / d);
        Ok(TriangleMetrics {
            area,
            diameter,
            min_height: 2.0 * area / diameter,
            circumcenter: self.a + rel,
            circumradius: rel.norm(),
        })
    }
}

pub fn triangle_metrics(t: &Triangle) -> Result<TriangleMetrics> {
    t.metrics()
}

/// Equilateral triangle with the given circumcenter and area. Vertex `k`
/// sits at polar angle `orientation + 2πk/3` around the center.
pub fn make_equilateral(center: Point2, area: f64, orientation: f64) -> Result<Triangle> {
    if !(area > 0.0 && area.is_finite()) {
        return Err(Error::invalid(format!("equilateral area must be positive, got {area}")));
    }
    if !(center.is_finite() && orientation.is_finite()) {
        return Err(Error::invalid("non-finite center or orientation"));
    }
    let side = (4.0 * area / 3f64.sqrt()).sqrt();
    let r = side / 3f64.sqrt();
    let vertex = |k: f64| {
        let th = orientation + k * 2.0 * std::f64::consts::PI / 3.0;
        center + Point2::new(r * th.cos(), r * th.sin())
    };
    Ok(Triangle::new(vertex(0.0), vertex(1.0), vertex(2.0)))
}

/// Axis-aligned square (or, more generally, rectangle) `[x0,x1] × [y0,y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Square {
    pub fn new(x0: f64, y0: f64, side: f64) -> Self {
        Self { x0, y0, x1: x0 + side, y1: y0 + side }
    }

    pub fn from_bounds(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn unit() -> Self {
        Self::from_bounds(0.0, 0.0, 1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point2 {
        Point2::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    /// Corners in counter-clockwise order starting at the lower-left one.
    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.x0, self.y0),
            Point2::new(self.x1, self.y0),
            Point2::new(self.x1, self.y1),
            Point2::new(self.x0, self.y1),
        ]
    }

    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        p.x >= self.x0 - tol && p.x <= self.x1 + tol && p.y >= self.y0 - tol && p.y <= self.y1 + tol
    }

    pub fn on_boundary(&self, p: Point2, tol: f64) -> bool {
        self.contains(p, tol)
            && ((p.x - self.x0).abs() <= tol
                || (p.x - self.x1).abs() <= tol
                || (p.y - self.y0).abs() <= tol
                || (p.y - self.y1).abs() <= tol)
    }

    /// The two triangles of the split along the lower-left/upper-right diagonal.
    pub fn diagonal_split(&self) -> [Triangle; 2] {
        let [p0, p1, p2, p3] = self.corners();
        [Triangle::new(p0, p1, p2), Triangle::new(p0, p2, p3)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn right_isosceles_metrics() {
        let t = Triangle::from_coords([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let m = t.metrics().unwrap();
        assert!(close(m.area, 0.5, 1e-15));
        assert!(close(m.diameter, 2f64.sqrt(), 1e-15));
        assert!(close(m.min_height, 1.0 / 2f64.sqrt(), 1e-15));
        assert!(close(m.circumcenter.x, 0.5, 1e-15) && close(m.circumcenter.y, 0.5, 1e-15));
        assert!(close(m.circumradius, 2f64.sqrt() / 2.0, 1e-15));
    }

    #[test]
    fn equilateral_metrics() {
        let t = Triangle::from_coords([[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]);
        let m = t.metrics().unwrap();
        assert!(close(m.circumradius, 1.0 / 3f64.sqrt(), 1e-15));
        assert!(close(m.min_height, 3f64.sqrt() / 2.0, 1e-15));
        for v in t.vertices() {
            assert!(close(v.dist(m.circumcenter), m.circumradius, 1e-15));
        }
    }

    #[test]
    fn degenerate_is_rejected() {
        let t = Triangle::from_coords([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]);
        assert!(matches!(t.metrics(), Err(Error::DegenerateTriangle { .. })));
    }

    #[test]
    fn unit_area_equilateral() {
        let t = make_equilateral(Point2::default(), 1.0, 0.0).unwrap();
        let s = 2.0 / 3f64.powf(0.25);
        for l in t.side_lengths() {
            assert!(close(l, s, 1e-14));
        }
        let m = t.metrics().unwrap();
        assert!(close(m.circumradius, s / 3f64.sqrt(), 1e-14));
        assert!(close(m.area, 1.0, 1e-12));
        assert!(m.circumcenter.norm() < 1e-14);
    }

    #[test]
    fn equilateral_three_fold_symmetry() {
        let t0 = make_equilateral(Point2::default(), 1.0, 0.0).unwrap();
        let t1 = make_equilateral(Point2::default(), 1.0, 2.0 * PI / 3.0).unwrap();
        for v in t1.vertices() {
            assert!(t0.vertices().iter().any(|w| w.dist(v) < 1e-14));
        }
    }

    #[test]
    fn equilateral_rejects_nonpositive_area() {
        assert!(matches!(
            make_equilateral(Point2::default(), 0.0, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(make_equilateral(Point2::default(), -1.0, 0.0).is_err());
    }

    #[test]
    fn reflected_triangle_forms_parallelogram() {
        let t = Triangle::from_coords([[0.1, 0.2], [0.9, 0.3], [0.4, 0.8]]);
        let r = t.reflected_across_side(0);
        assert!(close(r.area(), t.area(), 1e-15));
        let centre = t.b.midpoint(t.c);
        assert!(close(r.a.midpoint(t.a).dist(centre), 0.0, 1e-15));
    }
}
