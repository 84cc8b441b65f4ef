//! Linear interpolation on triangles and weighted L_p interpolation errors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{validate_triangulation, Point2, Triangle, Triangulation};
use crate::quadrature::{integrate_triangle_estimate_abs, QuadratureSpec};

/// A real function on the plane. Implemented for closures and for the
/// field and form types of this crate.
pub trait PlaneFn: Sync {
    fn eval(&self, p: Point2) -> f64;
}

impl<F: Fn(Point2) -> f64 + Sync> PlaneFn for F {
    fn eval(&self, p: Point2) -> f64 {
        self(p)
    }
}

/// The weight Ω ≡ 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitWeight;

impl PlaneFn for UnitWeight {
    fn eval(&self, _: Point2) -> f64 {
        1.0
    }
}

/// p(x, y) = a·x + b·y + c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFunction {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LinearFunction {
    pub fn eval(&self, p: Point2) -> f64 {
        self.a * p.x + self.b * p.y + self.c
    }
}

impl PlaneFn for LinearFunction {
    fn eval(&self, p: Point2) -> f64 {
        LinearFunction::eval(self, p)
    }
}

/// The affine function matching `g` at the three vertices of `t`.
pub fn linear_interpolant(g: &impl PlaneFn, t: &Triangle) -> Result<LinearFunction> {
    if t.is_degenerate() {
        return Err(Error::DegenerateTriangle { area: t.area() });
    }
    Ok(interpolate_values(t, [g.eval(t.a), g.eval(t.b), g.eval(t.c)]))
}

fn interpolate_values(t: &Triangle, v: [f64; 3]) -> LinearFunction {
    // Cramer's rule relative to vertex a
    let (e1, e2) = (t.b - t.a, t.c - t.a);
    let (d1, d2) = (v[1] - v[0], v[2] - v[0]);
    let det = e1.cross(e2);
    let a = (d1 * e2.y - d2 * e1.y) / det;
    let b = (e1.x * d2 - e2.x * d1) / det;
    LinearFunction { a, b, c: v[0] - a * t.a.x - b * t.a.y }
}

/// An L_{p,Ω} interpolation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorValue {
    pub p: f64,
    pub value: f64,
    /// ∫ |g - l(g,T)|^p Ω^p, additive over disjoint triangles.
    pub pth_power: f64,
    /// False when some quadrature hit its depth cap; the numbers are then
    /// best estimates.
    pub converged: bool,
}

impl ErrorValue {
    pub fn from_pth_power(p: f64, pth_power: f64, converged: bool) -> Self {
        ErrorValue { p, value: pth_power.max(0.0).powf(1.0 / p), pth_power, converged }
    }

    pub fn into_result(self) -> Result<ErrorValue> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::ToleranceNotReached { estimate: self.value })
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("exponent p must be positive and finite, got {p}")))
    }
}

/// Best-effort d(g, T, L_{p,Ω}); never fails on a missed tolerance.
pub fn cell_error_estimate(
    g: &impl PlaneFn,
    t: &Triangle,
    p: f64,
    omega: &impl PlaneFn,
    spec: &QuadratureSpec,
) -> Result<ErrorValue> {
    check_p(p)?;
    spec.validate()?;
    let l = linear_interpolant(g, t)?;
    let integrand = |q: Point2| (g.eval(q) - l.eval(q)).abs().powf(p) * omega.eval(q).powf(p);
    // Rounding in g leaves noise of size δ in e. Where e ≫ δ that perturbs
    // |e|^p by about p·e^{p-1}·δ; where e is all noise it is δ^p.
    let mut g_scale: f64 = 0.0;
    let mut w_scale: f64 = 0.0;
    let mut e_max: f64 = 0.0;
    for i in 0..=6 {
        for j in 0..=(6 - i) {
            let (u, v) = (i as f64 / 6.0, j as f64 / 6.0);
            let q = t.a + (t.b - t.a) * u + (t.c - t.a) * v;
            let gv = g.eval(q);
            g_scale = g_scale.max(gv.abs());
            w_scale = w_scale.max(omega.eval(q).abs());
            e_max = e_max.max((gv - l.eval(q)).abs());
        }
    }
    let delta = 64.0 * f64::EPSILON * g_scale;
    let floor = t.area() * w_scale.powf(p) * delta.max(e_max).powf(p) * (delta / e_max).min(1.0);
    let est = integrate_triangle_estimate_abs(&integrand, t, spec, floor);
    Ok(ErrorValue::from_pth_power(p, est.value, est.converged))
}

/// d(g, T, L_{p,Ω}) = (∫_T |g - l(g,T)|^p Ω^p)^{1/p} with the default
/// quadrature settings.
pub fn cell_error(g: &impl PlaneFn, t: &Triangle, p: f64, omega: &impl PlaneFn) -> Result<ErrorValue> {
    cell_error_estimate(g, t, p, omega, &QuadratureSpec::default())?.into_result()
}

/// Unweighted d(g, T, L_p).
pub fn cell_error_unweighted(g: &impl PlaneFn, t: &Triangle, p: f64) -> Result<f64> {
    Ok(cell_error(g, t, p, &UnitWeight)?.value)
}

/// ‖g - s(g, Δ)‖_{p,Ω} for the linear spline on `mesh`. The mesh is
/// validated first; per-triangle integrals run in parallel and are summed
/// in triangle order.
pub fn global_error(
    g: &impl PlaneFn,
    mesh: &Triangulation,
    p: f64,
    omega: &impl PlaneFn,
    spec: &QuadratureSpec,
) -> Result<ErrorValue> {
    check_p(p)?;
    let report = validate_triangulation(mesh);
    if !report.is_valid() {
        return Err(Error::InvalidTriangulation(report.summary()));
    }
    global_error_unchecked(g, mesh, p, omega, spec)
}

/// [`global_error`] without the validity check, for meshes already known
/// to be conforming.
pub fn global_error_unchecked(
    g: &impl PlaneFn,
    mesh: &Triangulation,
    p: f64,
    omega: &impl PlaneFn,
    spec: &QuadratureSpec,
) -> Result<ErrorValue> {
    check_p(p)?;
    let parts: Vec<ErrorValue> = (0..mesh.len())
        .into_par_iter()
        .map(|i| cell_error_estimate(g, &mesh.triangle(i), p, omega, spec))
        .collect::<Result<_>>()?;
    let pth: f64 = parts.iter().map(|e| e.pth_power).sum();
    let converged = parts.iter().all(|e| e.converged);
    Ok(ErrorValue::from_pth_power(p, pth, converged))
}

/// Both sides of the affine transport identity
/// d(Q∘F, F⁻¹(T), L_p) = d(Q, T, L_p)·|det F̃|^{-1/p}, computed independently.
pub fn affine_transport_check(
    q: &crate::quadform::QuadraticForm,
    t: &Triangle,
    f: &crate::quadform::AffineMap,
    p: f64,
) -> Result<(f64, f64)> {
    let inv = f.inverse()?;
    let pre = t.map(|v| inv.apply(v));
    let composed = |v: Point2| q.eval(f.apply(v));
    let lhs = cell_error_unweighted(&composed, &pre, p)?;
    let rhs = cell_error_unweighted(q, t, p)? * (1.0 / f.det().abs()).powf(1.0 / p);
    Ok((lhs, rhs))
}

/// (diam T)^p |T|^{p+1} / (2^{5p+1} h(T)^p), a lower bound for
/// d(Q̄, T, L_p)^p that grows with the aspect ratio.
pub fn aspect_lower_bound(t: &Triangle, p: f64) -> Result<f64> {
    check_p(p)?;
    let m = t.metrics()?;
    Ok(m.diameter.powf(p) * m.area.powf(p + 1.0) / (2f64.powf(5.0 * p + 1.0) * m.min_height.powf(p)))
}

/// Sampled sup over a 33×33 grid on `cell` of |f - P₂|, with P₂ the second
/// order Taylor polynomial at the cell center, against 2h²ω(h).
pub fn taylor_bound_check(f: &crate::fields::ScalarField, cell: &crate::geometry::Square) -> Result<(f64, f64)> {
    let h = cell.width();
    let c = cell.center();
    let f0 = f.value(c);
    let g = f.gradient(c);
    let [fxx, fxy, fyy] = f.second(c);
    let mut lhs: f64 = 0.0;
    for i in 0..33 {
        for j in 0..33 {
            let q = Point2::new(cell.x0 + h * i as f64 / 32.0, cell.y0 + h * j as f64 / 32.0);
            let (dx, dy) = (q.x - c.x, q.y - c.y);
            let p2 = f0 + g[0] * dx + g[1] * dy + 0.5 * (fxx * dx * dx + 2.0 * fxy * dx * dy + fyy * dy * dy);
            lhs = lhs.max((f.value(q) - p2).abs());
        }
    }
    let rhs = 2.0 * h * h * crate::fields::modulus_estimate(f, h)?;
    Ok((lhs, rhs))
}
