//! Numerical integration: Gauss–Legendre rules, adaptive 1D bisection and
//! adaptive integration over triangles with a fully symmetric base rule.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Triangle};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// by Newton iteration on the Legendre three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // p = P_n(x), q = P_{n-1}(x)
            let (mut q, mut p) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * q) / kf;
                q = p;
                p = next;
            }
            dp = n as f64 * (x * p - q) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

const GL_POINTS_1D: usize = 10;

fn gl10() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_POINTS_1D))
}

fn gl_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = gl10();
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>() * h
}

/// Most panels one 1D integration may create.
const MAX_PANELS: usize = 1 << 14;

struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    err: f64,
    seq: u64,
}

impl Panel {
    fn new(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, seq: u64) -> Self {
        let m = 0.5 * (a + b);
        let left = gl_panel(f, a, m);
        let right = gl_panel(f, m, b);
        Panel { a, b, left, right, err: (left + right - whole).abs(), seq }
    }
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == std::cmp::Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err).then(o.seq.cmp(&self.seq))
    }
}

/// Globally adaptive Gauss–Legendre quadrature on `[a, b]`. Each panel's
/// error is the difference between the 10-point rule on it and on its two
/// halves; the worst panel is bisected until the summed error is below
/// `max(abs_tol, rel_tol·|I|)`. Integrable endpoint singularities only cost
/// a few extra panels per decade of accuracy.
pub fn integrate_1d(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    use std::collections::BinaryHeap;

    if a == b {
        return 0.0;
    }
    let whole = gl_panel(&f, a, b);
    let mut seq = 0;
    let root = Panel::new(&f, a, b, whole, seq);
    let mut total = root.left + root.right;
    let mut total_err = root.err;
    let mut heap = BinaryHeap::new();
    heap.push(root);
    let mut done = Vec::new();
    while let Some(worst) = heap.pop() {
        let floor = 16.0 * f64::EPSILON * (worst.left.abs() + worst.right.abs());
        if total_err <= abs_tol.max(rel_tol * total.abs()) || heap.len() + done.len() >= MAX_PANELS {
            heap.push(worst);
            break;
        }
        let m = 0.5 * (worst.a + worst.b);
        if worst.err <= floor || m <= worst.a || m >= worst.b {
            // nothing left to gain on this panel
            total_err -= worst.err;
            done.push(worst);
            continue;
        }
        total -= worst.left + worst.right;
        total_err -= worst.err;
        for (lo, hi, v) in [(worst.a, m, worst.left), (m, worst.b, worst.right)] {
            seq += 1;
            let p = Panel::new(&f, lo, hi, v, seq);
            total += p.left + p.right;
            total_err += p.err;
            heap.push(p);
        }
    }
    let mut panels = heap.into_vec();
    panels.extend(done);
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    panels.iter().map(|p| p.left + p.right).sum()
}

/// Quadrature rule on the reference triangle `(0,0), (1,0), (0,1)`;
/// weights sum to the reference area ½.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub degree: usize,
    /// Barycentric coordinates of the nodes.
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Fully symmetric interior rule exact for polynomials of total degree
    /// `degree`: a collapsed (Duffy) Gauss–Legendre product rule averaged over
    /// the six permutations of the barycentric coordinates.
    pub fn symmetric(degree: usize) -> TriangleRule {
        let n = degree / 2 + 1;
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(6 * n * n);
        let mut weights = Vec::with_capacity(6 * n * n);
        for i in 0..n {
            let xi = 0.5 * (x[i] + 1.0);
            for j in 0..n {
                let eta = 0.5 * (x[j] + 1.0);
                let px = xi * (1.0 - eta);
                let py = eta;
                let wt = 0.25 * w[i] * w[j] * (1.0 - eta);
                let l = [1.0 - px - py, px, py];
                for perm in [[0, 1, 2], [1, 2, 0], [2, 0, 1], [0, 2, 1], [2, 1, 0], [1, 0, 2]] {
                    points.push([l[perm[0]], l[perm[1]], l[perm[2]]]);
                    weights.push(wt / 6.0);
                }
            }
        }
        TriangleRule { degree, points, weights }
    }

    /// Cached rule for degrees `0..=30`.
    pub fn cached(degree: usize) -> &'static TriangleRule {
        static RULES: [OnceLock<TriangleRule>; 31] = [const { OnceLock::new() }; 31];
        let d = degree.min(30);
        RULES[d].get_or_init(|| TriangleRule::symmetric(d))
    }

    /// Applies the rule to a physical triangle.
    pub fn apply(&self, h: &impl Fn(Point2) -> f64, t: &Triangle) -> f64 {
        let jac = 2.0 * t.area();
        let sum: f64 = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| {
                let p = Point2::new(
                    l[0] * t.a.x + l[1] * t.b.x + l[2] * t.c.x,
                    l[0] * t.a.y + l[1] * t.b.y + l[2] * t.c.y,
                );
                w * h(p)
            })
            .sum();
        sum * jac
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Polynomial degree of the symmetric base rule.
    pub degree: usize,
    pub max_depth: u32,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { degree: 10, max_depth: 12, rel_tol: 1e-9 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("quadrature tolerance must be positive"));
        }
        if self.degree > 30 {
            return Err(Error::invalid("quadrature degree must be at most 30"));
        }
        Ok(())
    }
}

/// Result of an adaptive integration; `converged == false` means some
/// branch hit the depth cap and `value` is the best available estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub converged: bool,
}

impl Estimate {
    pub fn into_result(self) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::ToleranceNotReached { estimate: self.value })
        }
    }
}

fn midpoint_children(t: &Triangle) -> [Triangle; 4] {
    let (ab, bc, ca) = (t.a.midpoint(t.b), t.b.midpoint(t.c), t.c.midpoint(t.a));
    [
        Triangle::new(t.a, ab, ca),
        Triangle::new(ab, t.b, bc),
        Triangle::new(ca, bc, t.c),
        Triangle::new(bc, ca, ab),
    ]
}

/// Hard cap on the number of live elements in one adaptive integration.
const MAX_ELEMENTS: usize = 1 << 16;

struct Element {
    children: [Triangle; 4],
    child_vals: [f64; 4],
    value: f64,
    err: f64,
    depth: u32,
    seq: u64,
}

impl Element {
    fn new(rule: &TriangleRule, h: &impl Fn(Point2) -> f64, t: &Triangle, coarse: f64, depth: u32, seq: u64) -> Self {
        let children = midpoint_children(t);
        let child_vals = children.map(|c| rule.apply(h, &c));
        let value: f64 = child_vals.iter().sum();
        Element { children, child_vals, value, err: (value - coarse).abs(), depth, seq }
    }
}

impl PartialEq for Element {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == std::cmp::Ordering::Equal
    }
}
impl Eq for Element {}
impl PartialOrd for Element {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Element {
    // max-heap on error; earlier elements first on ties
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err).then(o.seq.cmp(&self.seq))
    }
}

/// Globally adaptive integration of `h` over `t`. Each element carries the
/// difference between the base rule on it and on its four midpoint
/// children; the element with the largest difference is split until the
/// summed differences drop below `rel_tol·|value|`. Elements at `max_depth`
/// are frozen; if the tolerance cannot be met the estimate is returned with
/// `converged == false`.
pub fn integrate_triangle_estimate(
    h: &impl Fn(Point2) -> f64,
    t: &Triangle,
    spec: &QuadratureSpec,
) -> Estimate {
    integrate_triangle_estimate_abs(h, t, spec, 0.0)
}

/// [`integrate_triangle_estimate`] that also stops once the summed error is
/// below `abs_tol`, for integrands whose size is only rounding noise.
pub fn integrate_triangle_estimate_abs(
    h: &impl Fn(Point2) -> f64,
    t: &Triangle,
    spec: &QuadratureSpec,
    abs_tol: f64,
) -> Estimate {
    use std::collections::BinaryHeap;

    let rule = TriangleRule::cached(spec.degree);
    let coarse = rule.apply(h, t);
    let mut seq = 0u64;
    let root = Element::new(rule, h, t, coarse, 0, seq);
    if root.err <= abs_tol.max(spec.rel_tol * root.value.abs()) {
        return Estimate { value: root.value, converged: true };
    }
    let mut total_err = root.err;
    let mut total = root.value;
    let mut heap = BinaryHeap::new();
    let mut frozen = Vec::new();
    heap.push(root);
    let mut converged = false;
    while let Some(worst) = heap.pop() {
        if total_err <= abs_tol.max(spec.rel_tol * total.abs()) {
            heap.push(worst);
            converged = true;
            break;
        }
        if worst.depth >= spec.max_depth || heap.len() + frozen.len() + 4 > MAX_ELEMENTS {
            frozen.push(worst);
            continue;
        }
        total_err -= worst.err;
        total -= worst.value;
        for (c, v) in worst.children.iter().zip(worst.child_vals) {
            seq += 1;
            let e = Element::new(rule, h, c, v, worst.depth + 1, seq);
            total_err += e.err;
            total += e.value;
            heap.push(e);
        }
    }
    // Recompute the sums in a fixed order so the result does not depend on
    // the rounding of the running totals.
    let mut leaves: Vec<Element> = heap.into_vec();
    leaves.extend(frozen);
    leaves.sort_by_key(|e| e.seq);
    let value: f64 = leaves.iter().map(|e| e.value).sum();
    let err: f64 = leaves.iter().map(|e| e.err).sum();
    Estimate { value, converged: converged || err <= abs_tol.max(spec.rel_tol * value.abs()) }
}

/// [`integrate_triangle_estimate`] that reports a missed tolerance as
/// [`Error::ToleranceNotReached`] carrying the best estimate.
pub fn integrate_triangle(h: impl Fn(Point2) -> f64, t: &Triangle, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    if t.is_degenerate() {
        return Err(Error::DegenerateTriangle { area: t.area() });
    }
    integrate_triangle_estimate(&h, t, spec).into_result()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            for k in 0..2 * n {
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn adaptive_1d_handles_sqrt_endpoint() {
        // ∫₀¹ √x dx = 2/3
        let v = integrate_1d(f64::sqrt, 0.0, 1.0, 1e-15, 1e-14);
        assert!((v - 2.0 / 3.0).abs() < 1e-13);
    }

    // Exact monomial moments on the reference triangle: i! j! / (i+j+2)!.
    fn moment(i: u32, j: u32) -> f64 {
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        f(i) * f(j) / f(i + j + 2)
    }

    #[test]
    fn symmetric_rule_is_exact_to_degree() {
        let reference = Triangle::from_coords([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let rule = TriangleRule::symmetric(10);
        assert!((rule.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        assert!(rule.points.iter().all(|l| l.iter().all(|&c| c > 0.0)));
        for i in 0..=10u32 {
            for j in 0..=10 - i {
                let approx = rule.apply(&|p: Point2| p.x.powi(i as i32) * p.y.powi(j as i32), &reference);
                assert!((approx - moment(i, j)).abs() < 1e-15, "x^{i} y^{j}");
            }
        }
    }

    #[test]
    fn constant_and_linear_integrands() {
        let spec = QuadratureSpec::default();
        let t = Triangle::from_coords([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!((integrate_triangle(|_| 1.0, &t, &spec).unwrap() - 0.5).abs() < 1e-12);
        assert!((integrate_triangle(|p| p.x, &t, &spec).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn vertex_relabeling_does_not_change_value() {
        let spec = QuadratureSpec::default();
        let t = Triangle::from_coords([[0.1, 0.3], [0.9, 0.2], [0.5, 0.7]]);
        let h = |p: Point2| (p.x * 3.0).sin() * (p.y + 0.1).sqrt() + (p.x * p.y).exp();
        let v0 = integrate_triangle(h, &t, &spec).unwrap();
        for u in [Triangle::new(t.b, t.c, t.a), Triangle::new(t.c, t.b, t.a), Triangle::new(t.a, t.c, t.b)] {
            let v = integrate_triangle(h, &u, &spec).unwrap();
            assert!(((v - v0) / v0).abs() < 1e-10);
        }
    }

    #[test]
    fn vertex_power_singularity_converges() {
        // r^{1/4} at a vertex; polar form gives a 1D reference value
        let t = Triangle::from_coords([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let spec = QuadratureSpec { degree: 10, max_depth: 24, rel_tol: 1e-10 };
        let v = integrate_triangle(|p| p.norm().powf(0.25), &t, &spec).unwrap();
        let exact = integrate_1d(|th| (th.cos() + th.sin()).powf(-2.25) / 2.25, 0.0, FRAC_PI_2, 1e-16, 1e-14);
        assert!(((v - exact) / exact).abs() < 1e-9, "{v} vs {exact}");
    }

    #[test]
    fn depth_cap_reports_estimate() {
        let spec = QuadratureSpec { degree: 2, max_depth: 1, rel_tol: 1e-15 };
        let t = Triangle::from_coords([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        match integrate_triangle(|p| (p.x + p.y).powf(0.1), &t, &spec) {
            Err(Error::ToleranceNotReached { estimate }) => assert!(estimate > 0.0),
            other => panic!("expected ToleranceNotReached, got {other:?}"),
        }
    }
}
