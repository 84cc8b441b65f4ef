//! Construction of asymptotically optimal triangulations of D = [0,1]²:
//! freeze the field to its Taylor quadratic on an m×m grid of cells, tile
//! each cell with copies of the optimal triangle for the local form, clip to
//! the cell, and glue neighbouring cells into one conforming mesh.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{ModulusEstimator, ScalarField, WeightField};
use crate::geometry::{clip_to_cell, tile_region, validate_triangulation, Point2, Square, Triangle, Triangulation, GEOM_TOL};
use crate::quadform::{optimal_triangle, QuadraticForm};

/// Default ε.
pub const DEFAULT_EPSILON: f64 = 0.2;
/// Maximum number of gluing passes.
pub const MAX_GLUE_PASSES: usize = 10;

/// Smallest m ≥ 1 with (2/m²)·ω(1/m) ≤ ε/N, searched upwards to 4√N.
pub fn choose_m(field: &ScalarField, epsilon: f64, n: usize) -> Result<usize> {
    check_epsilon(epsilon)?;
    if n == 0 {
        return Err(Error::invalid("triangle budget N must be at least 1"));
    }
    let cap = (4.0 * (n as f64).sqrt()).ceil() as usize;
    let est = ModulusEstimator::new(field)?;
    let target = epsilon / n as f64;
    for m in 1..=cap.max(1) {
        let mf = m as f64;
        if 2.0 / (mf * mf) * est.omega(1.0 / mf)? <= target {
            return Ok(m);
        }
    }
    Err(Error::ModulusTooRough { cap })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("epsilon must lie in (0, 1), got {epsilon}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPlan {
    /// Row-major index `iy·m + ix`.
    pub index: usize,
    pub ix: usize,
    pub iy: usize,
    /// `[x0, y0, x1, y1]`.
    pub square: [f64; 4],
    pub center: [f64; 2],
    /// Local form A x² + 2C xy + B y²: the quadratic Taylor part at the
    /// center, negated for concave fields.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// H(f; center) = 4(AB - C²).
    pub hessian: f64,
    pub omega_bar: f64,
    pub budget: usize,
}

impl CellPlan {
    pub fn cell(&self) -> Square {
        let [x0, y0, x1, y1] = self.square;
        Square::from_bounds(x0, y0, x1, y1)
    }

    pub fn form(&self) -> QuadraticForm {
        QuadraticForm::new(self.a, self.b, self.c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshPlan {
    pub epsilon: f64,
    pub p: f64,
    pub n_target: usize,
    pub m: usize,
    pub cells: Vec<CellPlan>,
    /// Triangles in the glued mesh (0 until a mesh is built).
    pub n1: usize,
    /// Triangles touching some cell boundary.
    pub n1_bar: usize,
}

impl MeshPlan {
    pub fn budget_total(&self) -> usize {
        self.cells.iter().map(|c| c.budget).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// n_i = floor(N(1-ε)·w_i / Σw) + 1.
pub fn budgets(weights: &[f64], n: usize, epsilon: f64) -> Result<Vec<usize>> {
    check_epsilon(epsilon)?;
    let total: f64 = weights.iter().sum();
    if weights.is_empty() || !(total > 0.0 && total.is_finite()) || weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::invalid("budget weights must be nonnegative with a positive finite sum"));
    }
    let scale = n as f64 * (1.0 - epsilon);
    Ok(weights.iter().map(|w| (scale * w / total).floor() as usize + 1).collect())
}

/// Cell i of the m×m grid, with coordinates k/m computed the same way for
/// every cell so that shared sides are bit-identical.
pub fn grid_cell(ix: usize, iy: usize, m: usize) -> Square {
    let c = |k: usize| k as f64 / m as f64;
    Square::from_bounds(c(ix), c(iy), c(ix + 1), c(iy + 1))
}

/// Chooses m and fills in the per-cell forms, weights and budgets.
pub fn cell_plans(field: &ScalarField, weight: &WeightField, p: f64, epsilon: f64, n: usize) -> Result<MeshPlan> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::invalid(format!("exponent p must be positive, got {p}")));
    }
    let bounds = field.bounds()?;
    weight.check_positive()?;
    let m = choose_m(field, epsilon, n)?;
    let e1 = p / (2.0 * (p + 1.0));
    let e2 = p / (p + 1.0);
    let mut cells = Vec::with_capacity(m * m);
    let mut weights = Vec::with_capacity(m * m);
    for iy in 0..m {
        for ix in 0..m {
            let sq = grid_cell(ix, iy, m);
            let center = sq.center();
            let q = field.local_form(center)?.scaled(bounds.sign);
            let hessian = q.hessian();
            if !(hessian > 0.0 && q.a > 0.0) {
                return Err(Error::NotAdmissible(format!(
                    "{}: local form at ({}, {}) is not positive definite",
                    field.name(),
                    center.x,
                    center.y
                )));
            }
            let omega_bar = weight.sup_on(&sq)?;
            weights.push(hessian.powf(e1) * omega_bar.powf(e2));
            cells.push(CellPlan {
                index: iy * m + ix,
                ix,
                iy,
                square: [sq.x0, sq.y0, sq.x1, sq.y1],
                center: [center.x, center.y],
                a: q.a,
                b: q.b,
                c: q.c,
                hessian,
                omega_bar,
                budget: 0,
            });
        }
    }
    for (cell, b) in cells.iter_mut().zip(budgets(&weights, n, epsilon)?) {
        cell.budget = b;
    }
    Ok(MeshPlan { epsilon, p, n_target: n, m, cells, n1: 0, n1_bar: 0 })
}

/// Triangulation of one cell before gluing.
#[derive(Debug, Clone, Default)]
pub struct CellMesh {
    pub triangles: Vec<Triangle>,
    /// Vertices on the cell boundary.
    pub boundary_vertices: Vec<Point2>,
}

/// Tiles the cell with the optimal triangle of area 1/(m²n_i) for the
/// cell's form, anchored at the cell's lower-left corner, and clips the
/// tiling to the cell.
pub fn cell_mesh(plan: &CellPlan, m: usize) -> Result<CellMesh> {
    if plan.budget == 0 || m == 0 {
        return Err(Error::invalid("cell budget and grid size must be positive"));
    }
    let cell = plan.cell();
    let area = 1.0 / ((m * m) as f64 * plan.budget as f64);
    let t = optimal_triangle(&plan.form(), area, 0.0)?;
    let corner = Point2::new(cell.x0, cell.y0);
    let t = t.translated(corner - t.a);
    let tiles = tile_region(&t, &cell)?;
    let clipped = clip_to_cell(&tiles, &cell)?;
    let triangles = clipped.triangles().copied().collect();
    Ok(CellMesh { triangles, boundary_vertices: clipped.boundary_vertices })
}

// Vertices on interior grid lines x = k/m (vertical) or y = k/m, sorted
// along the line.
struct LineIndex {
    m: usize,
    vertical: Vec<Vec<f64>>,
    horizontal: Vec<Vec<f64>>,
}

impl LineIndex {
    fn line_of(&self, v: f64) -> Option<usize> {
        let k = (v * self.m as f64).round();
        if k < 1.0 || k >= self.m as f64 {
            return None;
        }
        ((v - k / self.m as f64).abs() <= GEOM_TOL).then_some(k as usize)
    }

    fn new(m: usize, points: impl Iterator<Item = Point2>) -> Self {
        let mut idx = LineIndex { m, vertical: vec![Vec::new(); m + 1], horizontal: vec![Vec::new(); m + 1] };
        for p in points {
            if let Some(k) = idx.line_of(p.x) {
                idx.vertical[k].push(p.y);
            }
            if let Some(k) = idx.line_of(p.y) {
                idx.horizontal[k].push(p.x);
            }
        }
        for v in idx.vertical.iter_mut().chain(idx.horizontal.iter_mut()) {
            v.sort_by(f64::total_cmp);
            v.dedup_by(|a, b| (*a - *b).abs() <= GEOM_TOL);
        }
        idx
    }

    // Points of the index strictly inside segment uv, ordered from u to v.
    fn inside(&self, u: Point2, v: Point2) -> Vec<Point2> {
        let pick = |list: &[f64], lo: f64, hi: f64| -> Vec<f64> {
            let start = list.partition_point(|&s| s <= lo + GEOM_TOL);
            list[start..].iter().copied().take_while(|&s| s < hi - GEOM_TOL).collect()
        };
        if let (Some(k), Some(k2)) = (self.line_of(u.x), self.line_of(v.x)) {
            if k == k2 {
                let x = k as f64 / self.m as f64;
                let (lo, hi) = (u.y.min(v.y), u.y.max(v.y));
                let mut pts: Vec<Point2> = pick(&self.vertical[k], lo, hi).into_iter().map(|y| Point2::new(x, y)).collect();
                if u.y > v.y {
                    pts.reverse();
                }
                return pts;
            }
        }
        if let (Some(k), Some(k2)) = (self.line_of(u.y), self.line_of(v.y)) {
            if k == k2 {
                let y = k as f64 / self.m as f64;
                let (lo, hi) = (u.x.min(v.x), u.x.max(v.x));
                let mut pts: Vec<Point2> = pick(&self.horizontal[k], lo, hi).into_iter().map(|x| Point2::new(x, y)).collect();
                if u.x > v.x {
                    pts.reverse();
                }
                return pts;
            }
        }
        Vec::new()
    }
}

// Splits `t` at vertices of `lines` lying inside one of its edges by
// fanning from the opposite vertex; None if no edge has such vertices.
fn split_once(t: &Triangle, lines: &LineIndex) -> Option<Vec<Triangle>> {
    let v = t.vertices();
    for k in 0..3 {
        let (u, w, opp) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
        let inner = lines.inside(u, w);
        if inner.is_empty() {
            continue;
        }
        let mut chain = Vec::with_capacity(inner.len() + 2);
        chain.push(u);
        chain.extend(inner);
        chain.push(w);
        return Some(chain.windows(2).map(|s| Triangle::new(opp, s[0], s[1])).collect());
    }
    None
}

/// Joins per-cell meshes: every triangle with an edge on a shared cell side
/// is fanned to the other cells' boundary vertices inside that edge.
/// Repeats until nothing changes, at most [`MAX_GLUE_PASSES`] times, and
/// verifies conformity of the result.
pub fn glue(cells: &[CellMesh], m: usize) -> Result<Triangulation> {
    let lines = LineIndex::new(m, cells.iter().flat_map(|c| c.boundary_vertices.iter().copied()));
    let mut tris: Vec<Triangle> = cells.iter().flat_map(|c| c.triangles.iter().copied()).collect();
    let mut settled = m <= 1;
    for _ in 0..MAX_GLUE_PASSES {
        if settled {
            break;
        }
        let mut changed = false;
        let mut next = Vec::with_capacity(tris.len());
        for t in &tris {
            match split_once(t, &lines) {
                Some(parts) => {
                    changed = true;
                    next.extend(parts);
                }
                None => next.push(*t),
            }
        }
        tris = next;
        settled = !changed;
    }
    if !settled {
        return Err(Error::GlueError(format!("hanging vertices remain after {MAX_GLUE_PASSES} passes")));
    }
    let mesh = Triangulation::from_triangles(&tris, Square::unit());
    let report = validate_triangulation(&mesh);
    if !report.is_valid() {
        return Err(Error::GlueError(report.summary()));
    }
    Ok(mesh)
}

/// Number of triangles with a vertex on some grid line k/m.
pub fn count_boundary_touching(mesh: &Triangulation, m: usize) -> usize {
    let on_line = |v: f64| {
        let k = (v * m as f64).round();
        (v - k / m as f64).abs() <= GEOM_TOL
    };
    mesh.triangles
        .iter()
        .filter(|t| t.iter().any(|&i| on_line(mesh.vertices[i].x) || on_line(mesh.vertices[i].y)))
        .count()
}

/// The full construction: plan, per-cell tilings (in parallel) and gluing.
pub fn build_mesh(
    field: &ScalarField,
    weight: &WeightField,
    p: f64,
    n: usize,
    epsilon: f64,
) -> Result<(Triangulation, MeshPlan)> {
    let mut plan = cell_plans(field, weight, p, epsilon, n)?;
    let cells: Vec<CellMesh> = plan.cells.par_iter().map(|c| cell_mesh(c, plan.m)).collect::<Result<_>>()?;
    let mesh = glue(&cells, plan.m)?;
    plan.n1 = mesh.len();
    plan.n1_bar = count_boundary_touching(&mesh, plan.m);
    Ok((mesh, plan))
}

/// k×k squares, k = floor(√(N/2)), each cut by the diagonal of slope +1.
pub fn uniform_mesh(n: usize) -> Result<Triangulation> {
    if n < 2 {
        return Err(Error::invalid("uniform mesh needs N >= 2"));
    }
    let k = ((n / 2) as f64).sqrt().floor() as usize;
    let k = if (k + 1) * (k + 1) * 2 <= n { k + 1 } else { k };
    let mut tris = Vec::with_capacity(2 * k * k);
    for iy in 0..k {
        for ix in 0..k {
            tris.extend(grid_cell(ix, iy, k).diagonal_split());
        }
    }
    Ok(Triangulation::from_triangles(&tris, Square::unit()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budgets_follow_the_quotient() {
        // weights 1, 2, 3, 2 with N(1-ε) = 80: 80·w/8 = 10, 20, 30, 20
        let b = budgets(&[1.0, 2.0, 3.0, 2.0], 100, 0.2).unwrap();
        assert_eq!(b, vec![11, 21, 31, 21]);
        let b = budgets(&[1.0, 1.0, 1.0], 10, 0.5).unwrap();
        assert_eq!(b, vec![2, 2, 2]);
        assert!(budgets(&[], 10, 0.5).is_err());
        assert!(budgets(&[1.0], 10, 1.0).is_err());
    }

    #[test]
    fn uniform_counts() {
        let m = uniform_mesh(8).unwrap();
        assert_eq!(m.len(), 8);
        assert!(m.iter_triangles().all(|t| (t.area() - 0.125).abs() < 1e-15));
        assert_eq!(uniform_mesh(250).unwrap().len(), 2 * 11 * 11);
        assert!(uniform_mesh(1).is_err());
    }

    #[test]
    fn quadratic_field_uses_one_cell() {
        let f = ScalarField::builtin("paraboloid").unwrap();
        assert_eq!(choose_m(&f, 0.2, 1000).unwrap(), 1);
    }

    #[test]
    fn glue_splits_hanging_midpoint() {
        // left cell has a vertex at the midpoint of the shared side, right does not
        let left = CellMesh {
            triangles: vec![
                Triangle::from_coords([[0.0, 0.0], [0.5, 0.0], [0.5, 0.5]]),
                Triangle::from_coords([[0.0, 0.0], [0.5, 0.5], [0.0, 1.0]]),
                Triangle::from_coords([[0.0, 1.0], [0.5, 0.5], [0.5, 1.0]]),
            ],
            boundary_vertices: vec![
                Point2::new(0.0, 0.0),
                Point2::new(0.0, 1.0),
                Point2::new(0.5, 0.0),
                Point2::new(0.5, 0.5),
                Point2::new(0.5, 1.0),
            ],
        };
        let right = CellMesh {
            triangles: vec![
                Triangle::from_coords([[0.5, 0.0], [1.0, 0.0], [1.0, 1.0]]),
                Triangle::from_coords([[0.5, 0.0], [1.0, 1.0], [0.5, 1.0]]),
            ],
            boundary_vertices: vec![
                Point2::new(0.5, 0.0),
                Point2::new(0.5, 1.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
            ],
        };
        // a 2×1 arrangement is not an m×m grid, so only the x = 1/2 line matters
        let mesh = glue(&[left, right], 2);
        let mesh = mesh.unwrap();
        assert_eq!(mesh.len(), 6);
    }

    #[test]
    fn identical_sides_need_no_split() {
        let a = CellMesh {
            triangles: Square::from_bounds(0.0, 0.0, 0.5, 1.0).diagonal_split().to_vec(),
            boundary_vertices: Square::from_bounds(0.0, 0.0, 0.5, 1.0).corners().to_vec(),
        };
        let b = CellMesh {
            triangles: Square::from_bounds(0.5, 0.0, 1.0, 1.0).diagonal_split().to_vec(),
            boundary_vertices: Square::from_bounds(0.5, 0.0, 1.0, 1.0).corners().to_vec(),
        };
        assert_eq!(glue(&[a, b], 2).unwrap().len(), 4);
    }
}
