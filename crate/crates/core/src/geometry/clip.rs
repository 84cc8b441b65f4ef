//! Lattice tilings of the plane by a triangle and its point-reflected copy,
//! and clipping of those tiles to an axis-aligned cell.

use serde::{Deserialize, Serialize};

use super::{orient2d, Point2, Square, Triangle, DISCARD_AREA, GEOM_TOL};
use crate::error::{Error, Result};

/// A convex polygon, vertices in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace formula; positive for counter-clockwise order.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n]))
            .sum::<f64>()
            * 0.5
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let sign = self.signed_area().signum();
        let scale = self
            .vertices
            .iter()
            .flat_map(|p| [p.x.abs(), p.y.abs()])
            .fold(1.0, f64::max);
        let tol = GEOM_TOL * scale * scale;
        (0..n).all(|i| {
            let (p, q, r) = (
                self.vertices[i],
                self.vertices[(i + 1) % n],
                self.vertices[(i + 2) % n],
            );
            sign * orient2d(p, q, r) >= -tol
        })
    }
}

/// Fan triangulation of a convex polygon with at most 7 vertices. The fan is
/// anchored at the lexicographically smallest vertex, so no new vertices are
/// introduced and the output is deterministic.
pub fn triangulate_polygon(poly: &Polygon) -> Result<Vec<Triangle>> {
    let n = poly.len();
    if !(3..=7).contains(&n) {
        return Err(Error::invalid(format!("polygon must have 3..=7 vertices, got {n}")));
    }
    if !poly.is_convex() {
        return Err(Error::invalid("polygon is not convex"));
    }
    let mut verts = poly.vertices.clone();
    if poly.signed_area() < 0.0 {
        verts.reverse();
    }
    let anchor = (0..n)
        .min_by(|&i, &j| verts[i].lex_cmp(&verts[j]))
        .unwrap_or(0);
    verts.rotate_left(anchor);
    Ok((1..n - 1)
        .map(|i| Triangle::new(verts[0], verts[i], verts[i + 1]))
        .collect())
}

/// Edge vectors `u`, `v` and origin `a` of the lattice generated by a
/// counter-clockwise triangle `(a, a+u, a+v)`.
struct Lattice {
    a: Point2,
    u: Point2,
    v: Point2,
}

impl Lattice {
    fn new(t: &Triangle) -> Self {
        let t = t.ccw();
        Self { a: t.a, u: t.b - t.a, v: t.c - t.a }
    }

    // Every tile computes its corners through this function, so shared
    // corners are bit-identical across tiles.
    fn point(&self, i: i64, j: i64) -> Point2 {
        Point2::new(
            self.a.x + i as f64 * self.u.x + j as f64 * self.v.x,
            self.a.y + i as f64 * self.u.y + j as f64 * self.v.y,
        )
    }

    fn coords(&self, p: Point2) -> (f64, f64) {
        let det = self.u.cross(self.v);
        let d = p - self.a;
        (d.cross(self.v) / det, self.u.cross(d) / det)
    }
}

/// All lattice translates of `t` and of its copy reflected through the
/// midpoint of side `bc` that overlap `cell` with positive area. The two
/// triangles together form the parallelogram whose translates tile the plane.
pub fn tile_region(t: &Triangle, cell: &Square) -> Result<Vec<Triangle>> {
    if t.is_degenerate() {
        return Err(Error::DegenerateTriangle { area: t.area() });
    }
    let lat = Lattice::new(t);
    let (mut smin, mut smax, mut tmin, mut tmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for corner in cell.corners() {
        let (s, r) = lat.coords(corner);
        smin = smin.min(s);
        smax = smax.max(s);
        tmin = tmin.min(r);
        tmax = tmax.max(r);
    }
    let (i0, i1) = (smin.floor() as i64 - 1, smax.ceil() as i64 + 1);
    let (j0, j1) = (tmin.floor() as i64 - 1, tmax.ceil() as i64 + 1);

    let mut tiles = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            let lower = Triangle::new(lat.point(i, j), lat.point(i + 1, j), lat.point(i, j + 1));
            let upper = Triangle::new(
                lat.point(i + 1, j + 1),
                lat.point(i, j + 1),
                lat.point(i + 1, j),
            );
            for tile in [lower, upper] {
                if overlaps_cell(&tile, cell) {
                    tiles.push(tile);
                }
            }
        }
    }
    Ok(tiles)
}

fn overlaps_cell(t: &Triangle, cell: &Square) -> bool {
    let vs = t.vertices();
    let (xmin, xmax) = vs.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.x), b.max(p.x)));
    let (ymin, ymax) = vs.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.y), b.max(p.y)));
    if xmax <= cell.x0 || xmin >= cell.x1 || ymax <= cell.y0 || ymin >= cell.y1 {
        return false;
    }
    clip_triangle(t, cell).area() > DISCARD_AREA
}

#[derive(Debug, Clone, Copy)]
enum Axis {
    X,
    Y,
}

/// Half-plane `sign · (p[axis] − value) ≥ 0`.
#[derive(Debug, Clone, Copy)]
struct HalfPlane {
    axis: Axis,
    value: f64,
    sign: f64,
}

impl HalfPlane {
    fn coord(&self, p: Point2) -> f64 {
        match self.axis {
            Axis::X => p.x,
            Axis::Y => p.y,
        }
    }

    fn snap(&self, mut p: Point2) -> Point2 {
        match self.axis {
            Axis::X => p.x = self.value,
            Axis::Y => p.y = self.value,
        }
        p
    }

    fn distance(&self, p: Point2) -> f64 {
        let d = self.sign * (self.coord(p) - self.value);
        if d.abs() <= GEOM_TOL {
            0.0
        } else {
            d
        }
    }

    fn intersect(&self, p: Point2, q: Point2) -> Point2 {
        // Canonical endpoint order: the shared edge of two neighbouring tiles
        // then yields a bit-identical intersection point.
        let (p, q) = if p.lex_cmp(&q).is_le() { (p, q) } else { (q, p) };
        let t = (self.value - self.coord(p)) / (self.coord(q) - self.coord(p));
        self.snap(p + (q - p) * t)
    }
}

fn cell_half_planes(cell: &Square) -> [HalfPlane; 4] {
    [
        HalfPlane { axis: Axis::X, value: cell.x0, sign: 1.0 },
        HalfPlane { axis: Axis::X, value: cell.x1, sign: -1.0 },
        HalfPlane { axis: Axis::Y, value: cell.y0, sign: 1.0 },
        HalfPlane { axis: Axis::Y, value: cell.y1, sign: -1.0 },
    ]
}

/// Successive half-plane (Sutherland–Hodgman) clipping of `t` against the
/// four sides of `cell`. Points within [`GEOM_TOL`] of a side are snapped
/// onto it exactly.
fn clip_triangle(t: &Triangle, cell: &Square) -> Polygon {
    let mut poly: Vec<Point2> = t.ccw().vertices().to_vec();
    for hp in cell_half_planes(cell) {
        if poly.is_empty() {
            break;
        }
        let n = poly.len();
        let mut out = Vec::with_capacity(n + 2);
        for k in 0..n {
            let (p, q) = (poly[k], poly[(k + 1) % n]);
            let (dp, dq) = (hp.distance(p), hp.distance(q));
            if dp >= 0.0 {
                out.push(if dp == 0.0 { hp.snap(p) } else { p });
            }
            if (dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0) {
                out.push(hp.intersect(p, q));
            }
        }
        poly = out;
    }
    dedup_cyclic(&mut poly);
    Polygon::new(poly)
}

fn dedup_cyclic(poly: &mut Vec<Point2>) {
    poly.dedup_by(|a, b| a.dist(*b) <= GEOM_TOL);
    while poly.len() > 1 && poly[0].dist(poly[poly.len() - 1]) <= GEOM_TOL {
        poly.pop();
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ClipResult {
    /// Tiles lying entirely in the cell, unchanged.
    pub interior: Vec<Triangle>,
    /// Fan triangles of the clipped boundary tiles.
    pub boundary: Vec<Triangle>,
    /// All produced vertices lying on the cell boundary, sorted and unique.
    pub boundary_vertices: Vec<Point2>,
}

impl ClipResult {
    pub fn triangles(&self) -> impl Iterator<Item = &Triangle> {
        self.interior.iter().chain(self.boundary.iter())
    }

    pub fn total_area(&self) -> f64 {
        self.triangles().map(Triangle::area).sum()
    }
}

/// Restricts a covering set of tiles to `cell`: tiles inside the cell pass
/// through, tiles crossing its boundary become convex polygons of at most 7
/// vertices, fan-triangulated into at most 5 triangles.
pub fn clip_to_cell(tiles: &[Triangle], cell: &Square) -> Result<ClipResult> {
    let mut res = ClipResult::default();
    for tile in tiles {
        if tile.vertices().iter().all(|p| strictly_inside(cell, *p)) {
            res.interior.push(*tile);
            continue;
        }
        let poly = clip_triangle(tile, cell);
        if poly.len() < 3 || poly.area() <= DISCARD_AREA {
            continue;
        }
        debug_assert!(poly.len() <= 7);
        if poly.len() == 3 && poly.vertices.iter().all(|p| tile.vertices().contains(p)) {
            // Touches the boundary only at vertices or along an edge.
            res.interior.push(*tile);
            continue;
        }
        for tri in triangulate_polygon(&poly)? {
            if tri.area() > DISCARD_AREA {
                res.boundary.push(tri);
            }
        }
    }
    let covered = res.total_area();
    if (covered - cell.area()).abs() > 1e-10 * cell.area() {
        return Err(Error::CoverageError(format!(
            "clipped area {covered} differs from cell area {}",
            cell.area()
        )));
    }
    let mut bv: Vec<Point2> = res
        .triangles()
        .flat_map(|t| t.vertices())
        .filter(|p| cell.on_boundary(*p, GEOM_TOL))
        .collect();
    bv.sort_by(Point2::lex_cmp);
    bv.dedup_by(|a, b| a.dist(*b) <= GEOM_TOL);
    res.boundary_vertices = bv;
    Ok(res)
}

fn strictly_inside(cell: &Square, p: Point2) -> bool {
    p.x > cell.x0 + GEOM_TOL
        && p.x < cell.x1 - GEOM_TOL
        && p.y > cell.y0 + GEOM_TOL
        && p.y < cell.y1 - GEOM_TOL
}
