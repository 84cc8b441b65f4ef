//! Indexed triangulations of a square domain, conformity validation and
//! the JSON / OFF exchange formats.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{orient2d, Point2, Square, Triangle, GEOM_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    pub vertices: Vec<Point2>,
    /// Vertex-index triples, counter-clockwise.
    pub triangles: Vec<[usize; 3]>,
    pub domain: Square,
}

/// Wire layout: `{"vertices":[[x,y],...],"triangles":[[i,j,k],...],"domain":[x0,y0,x1,y1]}`.
#[derive(Serialize, Deserialize)]
struct MeshFile {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    domain: [f64; 4],
}

/// Spatial hash that merges points closer than `tol`.
pub(crate) struct VertexIndex {
    tol: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    pub(crate) points: Vec<Point2>,
}

impl VertexIndex {
    pub(crate) fn new(tol: f64) -> Self {
        Self { tol, buckets: HashMap::new(), points: Vec::new() }
    }

    fn key(&self, p: Point2) -> (i64, i64) {
        let h = self.tol * 16.0;
        ((p.x / h).floor() as i64, (p.y / h).floor() as i64)
    }

    pub(crate) fn insert(&mut self, p: Point2) -> usize {
        let (kx, ky) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.buckets.get(&(kx + dx, ky + dy)) {
                    if let Some(&id) = ids.iter().find(|&&id| self.points[id].dist(p) <= self.tol) {
                        return id;
                    }
                }
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.buckets.entry((kx, ky)).or_default().push(id);
        id
    }
}

impl Triangulation {
    /// Builds an indexed mesh from a triangle soup, merging vertices closer
    /// than [`GEOM_TOL`] and orienting every triangle counter-clockwise.
    pub fn from_triangles(tris: &[Triangle], domain: Square) -> Self {
        let mut index = VertexIndex::new(GEOM_TOL);
        let mut triangles = Vec::with_capacity(tris.len());
        for t in tris {
            let t = t.ccw();
            let ids = t.vertices().map(|p| index.insert(p));
            if ids[0] != ids[1] && ids[1] != ids[2] && ids[0] != ids[2] {
                triangles.push(ids);
            }
        }
        Self { vertices: index.points, triangles, domain }
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, i: usize) -> Triangle {
        let [a, b, c] = self.triangles[i];
        Triangle::new(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn iter_triangles(&self) -> impl Iterator<Item = Triangle> + '_ {
        (0..self.triangles.len()).map(|i| self.triangle(i))
    }

    pub fn total_area(&self) -> f64 {
        self.iter_triangles().map(|t| t.area()).sum()
    }

    /// Splits every triangle into four by joining edge midpoints.
    pub fn refine_midpoints(&self) -> Triangulation {
        let tris: Vec<Triangle> = self
            .iter_triangles()
            .flat_map(|t| {
                let (ab, bc, ca) = (t.a.midpoint(t.b), t.b.midpoint(t.c), t.c.midpoint(t.a));
                [
                    Triangle::new(t.a, ab, ca),
                    Triangle::new(ab, t.b, bc),
                    Triangle::new(ca, bc, t.c),
                    Triangle::new(ab, bc, ca),
                ]
            })
            .collect();
        Triangulation::from_triangles(&tris, self.domain)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = MeshFile {
            vertices: self.vertices.iter().map(|p| [p.x, p.y]).collect(),
            triangles: self.triangles.clone(),
            domain: [self.domain.x0, self.domain.y0, self.domain.x1, self.domain.y1],
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let file: MeshFile = serde_json::from_str(src)?;
        let [x0, y0, x1, y1] = file.domain;
        let n = file.vertices.len();
        if let Some(t) = file.triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::InvalidTriangulation(format!("triangle {t:?} references a missing vertex")));
        }
        Ok(Self {
            vertices: file.vertices.into_iter().map(|[x, y]| Point2::new(x, y)).collect(),
            triangles: file.triangles,
            domain: Square::from_bounds(x0, y0, x1, y1),
        })
    }

    /// Plain-text OFF export (z = 0) for external viewers.
    pub fn to_off(&self) -> String {
        let mut s = String::with_capacity(32 * (self.vertices.len() + self.triangles.len()));
        s.push_str("OFF\n");
        let _ = writeln!(s, "{} {} 0", self.vertices.len(), self.triangles.len());
        for p in &self.vertices {
            let _ = writeln!(s, "{} {} 0", p.x, p.y);
        }
        for [a, b, c] in &self.triangles {
            let _ = writeln!(s, "3 {a} {b} {c}");
        }
        s
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub triangle_count: usize,
    pub vertex_count: usize,
    /// Triangle pairs whose interiors overlap.
    pub overlapping_pairs: Vec<(usize, usize)>,
    /// `(vertex, triangle)`: vertex lies strictly inside an edge of the triangle.
    pub hanging_vertices: Vec<(usize, usize)>,
    /// Edges used by one triangle but not on the domain boundary, or by more than two.
    pub unmatched_edges: Vec<(usize, usize)>,
    pub degenerate_triangles: Vec<usize>,
    pub bad_indices: Vec<usize>,
    pub unreferenced_vertices: Vec<usize>,
    pub duplicate_vertices: Vec<(usize, usize)>,
    pub vertices_outside_domain: Vec<usize>,
    pub domain_area: f64,
    /// `domain area − Σ triangle areas`.
    pub coverage_deficit: f64,
}

impl ValidityReport {
    pub fn coverage_ok(&self) -> bool {
        self.coverage_deficit.abs() <= 1e-10 * self.domain_area
    }

    pub fn conformity_violations(&self) -> usize {
        self.overlapping_pairs.len() + self.unmatched_edges.len() + self.bad_indices.len()
    }

    pub fn is_valid(&self) -> bool {
        self.overlapping_pairs.is_empty()
            && self.hanging_vertices.is_empty()
            && self.unmatched_edges.is_empty()
            && self.degenerate_triangles.is_empty()
            && self.bad_indices.is_empty()
            && self.unreferenced_vertices.is_empty()
            && self.duplicate_vertices.is_empty()
            && self.vertices_outside_domain.is_empty()
            && self.coverage_ok()
    }

    pub fn summary(&self) -> String {
        format!(
            "{} triangles, {} vertices: {} overlaps, {} hanging vertices, {} unmatched edges, \
             {} degenerate, {} unreferenced, {} duplicates, {} outside, coverage deficit {:e}",
            self.triangle_count,
            self.vertex_count,
            self.overlapping_pairs.len(),
            self.hanging_vertices.len(),
            self.unmatched_edges.len(),
            self.degenerate_triangles.len(),
            self.unreferenced_vertices.len(),
            self.duplicate_vertices.len(),
            self.vertices_outside_domain.len(),
            self.coverage_deficit
        )
    }
}

/// Uniform bucket grid over the domain for broad-phase queries.
struct Grid {
    x0: f64,
    y0: f64,
    h: f64,
    nx: i64,
    ny: i64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn new(domain: &Square, items: usize) -> Self {
        let n = ((items as f64).sqrt().ceil() as i64).clamp(1, 2048);
        let h = (domain.width().max(domain.height()) / n as f64).max(1e-9);
        Self { x0: domain.x0, y0: domain.y0, h, nx: n, ny: n, cells: HashMap::new() }
    }

    fn index(&self, x: f64, y: f64) -> (i64, i64) {
        (
            (((x - self.x0) / self.h).floor() as i64).clamp(-1, self.nx),
            (((y - self.y0) / self.h).floor() as i64).clamp(-1, self.ny),
        )
    }

    fn range(&self, lo: Point2, hi: Point2, pad: f64) -> ((i64, i64), (i64, i64)) {
        (self.index(lo.x - pad, lo.y - pad), self.index(hi.x + pad, hi.y + pad))
    }

    fn insert_box(&mut self, id: usize, lo: Point2, hi: Point2) {
        let ((i0, j0), (i1, j1)) = self.range(lo, hi, GEOM_TOL);
        for i in i0..=i1 {
            for j in j0..=j1 {
                self.cells.entry((i, j)).or_default().push(id);
            }
        }
    }
}

fn bbox(t: &Triangle) -> (Point2, Point2) {
    let vs = t.vertices();
    let lo = Point2::new(vs.iter().map(|p| p.x).fold(f64::MAX, f64::min), vs.iter().map(|p| p.y).fold(f64::MAX, f64::min));
    let hi = Point2::new(vs.iter().map(|p| p.x).fold(f64::MIN, f64::max), vs.iter().map(|p| p.y).fold(f64::MIN, f64::max));
    (lo, hi)
}

/// Separating-axis test on the six edge normals; touching (zero-width
/// overlap) counts as separated.
fn interiors_overlap(s: &Triangle, t: &Triangle) -> bool {
    let scale = s.diameter().max(t.diameter());
    let tol = 1e-10 * scale * scale;
    !(separated_by_edge_of(s, t, tol) || separated_by_edge_of(t, s, tol))
}

// `other` lies entirely on the outer side of (or touches) some edge of `tri`.
fn separated_by_edge_of(tri: &Triangle, other: &Triangle, tol: f64) -> bool {
    let vs = tri.ccw().vertices();
    (0..3).any(|k| {
        let (p, q) = (vs[k], vs[(k + 1) % 3]);
        other.vertices().iter().all(|&r| orient2d(p, q, r) <= tol)
    })
}

fn on_domain_boundary(domain: &Square, p: Point2, q: Point2) -> bool {
    let tol = GEOM_TOL * 10.0;
    ((p.x - domain.x0).abs() <= tol && (q.x - domain.x0).abs() <= tol)
        || ((p.x - domain.x1).abs() <= tol && (q.x - domain.x1).abs() <= tol)
        || ((p.y - domain.y0).abs() <= tol && (q.y - domain.y0).abs() <= tol)
        || ((p.y - domain.y1).abs() <= tol && (q.y - domain.y1).abs() <= tol)
}

/// Checks the conformity conditions of a triangulation of its domain: any two
/// triangles meet in nothing, a common vertex or a common full edge, and the
/// triangles cover the domain.
pub fn validate_triangulation(mesh: &Triangulation) -> ValidityReport {
    let nv = mesh.vertices.len();
    let mut rep = ValidityReport {
        triangle_count: mesh.triangles.len(),
        vertex_count: nv,
        domain_area: mesh.domain.area(),
        ..Default::default()
    };
    let domain = mesh.domain;

    let mut good: Vec<usize> = Vec::with_capacity(mesh.triangles.len());
    let mut referenced = vec![false; nv];
    for (i, tri) in mesh.triangles.iter().enumerate() {
        if tri.iter().any(|&v| v >= nv) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            rep.bad_indices.push(i);
            continue;
        }
        for &v in tri {
            referenced[v] = true;
        }
        if mesh.triangle(i).is_degenerate() {
            rep.degenerate_triangles.push(i);
            continue;
        }
        good.push(i);
    }
    rep.unreferenced_vertices = (0..nv).filter(|&v| !referenced[v]).collect();
    rep.vertices_outside_domain = (0..nv)
        .filter(|&v| !domain.contains(mesh.vertices[v], GEOM_TOL * 10.0))
        .collect();
    rep.coverage_deficit = domain.area() - good.iter().map(|&i| mesh.triangle(i).area()).sum::<f64>();

    // Edge incidence.
    let mut edges: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for &i in &good {
        let t = mesh.triangles[i];
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            edges.entry((a.min(b), a.max(b))).or_default().push(i);
        }
    }
    let mut unmatched: Vec<(usize, usize)> = edges
        .iter()
        .filter(|((a, b), ts)| match ts.len() {
            1 => !on_domain_boundary(&domain, mesh.vertices[*a], mesh.vertices[*b]),
            2 => {
                // The two triangles must lie on opposite sides of the edge.
                let (p, q) = (mesh.vertices[*a], mesh.vertices[*b]);
                let third = |t: usize| {
                    let tri = mesh.triangles[t];
                    mesh.vertices[*tri.iter().find(|&&v| v != *a && v != *b).unwrap()]
                };
                orient2d(p, q, third(ts[0])) * orient2d(p, q, third(ts[1])) >= 0.0
            }
            _ => true,
        })
        .map(|(e, _)| *e)
        .collect();
    unmatched.sort_unstable();
    rep.unmatched_edges = unmatched;

    // Duplicate vertices.
    let mut vgrid = Grid::new(&domain, nv.max(1));
    for (v, p) in mesh.vertices.iter().enumerate() {
        vgrid.insert_box(v, *p, *p);
    }
    let mut dups = HashSet::new();
    for (v, p) in mesh.vertices.iter().enumerate() {
        let ((i0, j0), (i1, j1)) = vgrid.range(*p, *p, GEOM_TOL);
        for i in i0..=i1 {
            for j in j0..=j1 {
                for &w in vgrid.cells.get(&(i, j)).map(Vec::as_slice).unwrap_or(&[]) {
                    if w > v && mesh.vertices[w].dist(*p) <= GEOM_TOL {
                        dups.insert((v, w));
                    }
                }
            }
        }
    }
    rep.duplicate_vertices = dups.into_iter().collect();
    rep.duplicate_vertices.sort_unstable();

    // Hanging vertices: a used vertex strictly inside some triangle edge.
    let mut hanging = HashSet::new();
    for &i in &good {
        let tri = mesh.triangles[i];
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
            let len = p.dist(q);
            let lo = Point2::new(p.x.min(q.x), p.y.min(q.y));
            let hi = Point2::new(p.x.max(q.x), p.y.max(q.y));
            let ((i0, j0), (i1, j1)) = vgrid.range(lo, hi, GEOM_TOL);
            for gi in i0..=i1 {
                for gj in j0..=j1 {
                    for &w in vgrid.cells.get(&(gi, gj)).map(Vec::as_slice).unwrap_or(&[]) {
                        if w == a || w == b || !referenced[w] {
                            continue;
                        }
                        let r = mesh.vertices[w];
                        let s = (r - p).dot(q - p) / (len * len);
                        let dist = (q - p).cross(r - p).abs() / len;
                        if dist <= GEOM_TOL * 10.0 && s * len > GEOM_TOL && (1.0 - s) * len > GEOM_TOL {
                            hanging.insert((w, i));
                        }
                    }
                }
            }
        }
    }
    rep.hanging_vertices = hanging.into_iter().collect();
    rep.hanging_vertices.sort_unstable();

    // Pairwise interior overlaps.
    let mut tgrid = Grid::new(&domain, good.len().max(1));
    let boxes: HashMap<usize, (Point2, Point2)> = good.iter().map(|&i| (i, bbox(&mesh.triangle(i)))).collect();
    for &i in &good {
        let (lo, hi) = boxes[&i];
        tgrid.insert_box(i, lo, hi);
    }
    let mut overlaps = HashSet::new();
    for ids in tgrid.cells.values() {
        for (x, &i) in ids.iter().enumerate() {
            for &j in &ids[x + 1..] {
                let (a, b) = (i.min(j), i.max(j));
                if overlaps.contains(&(a, b)) {
                    continue;
                }
                let ((lo1, hi1), (lo2, hi2)) = (boxes[&a], boxes[&b]);
                if lo1.x >= hi2.x || lo2.x >= hi1.x || lo1.y >= hi2.y || lo2.y >= hi1.y {
                    continue;
                }
                if interiors_overlap(&mesh.triangle(a), &mesh.triangle(b)) {
                    overlaps.insert((a, b));
                }
            }
        }
    }
    rep.overlapping_pairs = overlaps.into_iter().collect();
    rep.overlapping_pairs.sort_unstable();
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_halves() -> Triangulation {
        Triangulation::from_triangles(&Square::unit().diagonal_split(), Square::unit())
    }

    #[test]
    fn shared_edge_is_valid() {
        let mesh = two_halves();
        assert_eq!(mesh.vertices.len(), 4);
        let rep = validate_triangulation(&mesh);
        assert!(rep.is_valid(), "{}", rep.summary());
    }

    #[test]
    fn overlapping_interiors_flagged() {
        let mut mesh = two_halves();
        // Replace the second triangle by one overlapping the first.
        mesh.vertices.push(Point2::new(0.6, 0.1));
        mesh.triangles[1] = [0, 4, 2];
        let rep = validate_triangulation(&mesh);
        assert!(!rep.overlapping_pairs.is_empty());
        assert!(!rep.is_valid());
    }

    #[test]
    fn hanging_vertex_flagged() {
        // Left half split at the midpoint of the diagonal, right half not.
        let d = Square::unit();
        let m = Point2::new(0.5, 0.5);
        let [p0, p1, p2, p3] = d.corners();
        let tris = [
            Triangle::new(p0, p1, p2),
            Triangle::new(p0, m, p3),
            Triangle::new(m, p2, p3),
        ];
        let mesh = Triangulation::from_triangles(&tris, d);
        let rep = validate_triangulation(&mesh);
        assert_eq!(rep.hanging_vertices.len(), 1);
        assert!(!rep.is_valid());
    }

    #[test]
    fn coverage_deficit_reported() {
        let d = Square::unit();
        let mesh = Triangulation::from_triangles(&d.diagonal_split()[..1], d);
        let rep = validate_triangulation(&mesh);
        assert!((rep.coverage_deficit - 0.5).abs() < 1e-15);
        assert!(!rep.is_valid());
    }

    #[test]
    fn json_and_off_exports() {
        let mesh = two_halves();
        let back = Triangulation::from_json(&mesh.to_json().unwrap()).unwrap();
        assert_eq!(back, mesh);
        let off = mesh.to_off();
        let mut lines = off.lines();
        assert_eq!(lines.next(), Some("OFF"));
        assert_eq!(lines.next(), Some("4 2 0"));
        assert_eq!(off.lines().filter(|l| l.starts_with("3 ")).count(), 2);
    }

    #[test]
    fn json_with_missing_vertex_rejected() {
        let src = r#"{"vertices":[[0,0],[1,0]],"triangles":[[0,1,2]],"domain":[0,0,1,1]}"#;
        assert!(matches!(Triangulation::from_json(src), Err(Error::InvalidTriangulation(_))));
    }

    #[test]
    fn midpoint_refinement_stays_valid() {
        let fine = two_halves().refine_midpoints().refine_midpoints();
        assert_eq!(fine.len(), 32);
        assert!(validate_triangulation(&fine).is_valid());
    }
}
