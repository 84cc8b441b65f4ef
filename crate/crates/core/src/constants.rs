//! The optimal constant C_p^+, the angle functions l(A) and m(A) behind it,
//! and the one-parameter error profiles used to show that equilateral
//! triangles are optimal.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::geometry::{make_equilateral, Point2};
use crate::quadrature::{integrate_1d, integrate_triangle, QuadratureSpec};

const ABS_TOL: f64 = 1e-300;
const REL_TOL: f64 = 1e-14;

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("exponent p must be positive and finite, got {p}")))
    }
}

/// Complete Beta function via log-Gamma.
pub fn beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::invalid(format!("beta needs a, b > 0, got ({a}, {b})")));
    }
    Ok((ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp())
}

/// γ(p) = ½·B(p+1, ½), the factor in l'(A) = γ(p)·sin^{2p+2} A.
pub fn gamma_p(p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(0.5 * beta(p + 1.0, 0.5)?)
}

/// Non-regularized incomplete Beta function `∫₀ˣ t^{a-1}(1-t)^{b-1} dt`.
///
/// The range is split at `min(x, ½)`. When `a < 1` the left piece is
/// integrated in `u = t^a`, when `b < 1` the right piece in `v = (1-t)^b`,
/// which turns both endpoint singularities into bounded integrands.
pub fn incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("incomplete beta needs x in [0,1], got {x}")));
    }
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::invalid(format!("incomplete beta needs a, b > 0, got ({a}, {b})")));
    }
    let mid = x.min(0.5);
    let left = if a < 1.0 {
        let g = |u: f64| (1.0 - u.powf(1.0 / a)).powf(b - 1.0) / a;
        integrate_1d(g, 0.0, mid.powf(a), ABS_TOL, REL_TOL)
    } else {
        let g = |t: f64| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0);
        integrate_1d(g, 0.0, mid, ABS_TOL, REL_TOL)
    };
    if x <= mid {
        return Ok(left);
    }
    let right = if b < 1.0 {
        let g = |v: f64| (1.0 - v.powf(1.0 / b)).powf(a - 1.0) / b;
        integrate_1d(g, (1.0 - x).powf(b), (1.0 - mid).powf(b), ABS_TOL, REL_TOL)
    } else {
        let g = |t: f64| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0);
        integrate_1d(g, mid, x, ABS_TOL, REL_TOL)
    };
    Ok(left + right)
}

// ∫_{cos A}^1 x(1-x²)^p arccos(cos A / x) dx in the original variable.
fn l_direct(a: f64, p: f64) -> f64 {
    let c = a.cos();
    let g = |x: f64| x * ((1.0 - x) * (1.0 + x)).powf(p) * (c / x).min(1.0).acos();
    integrate_1d(g, c.max(0.0), 1.0, ABS_TOL, REL_TOL)
}

// Same integral after x = cos A / cos φ, which keeps full relative accuracy
// for small A where 1 - cos A cancels.
fn l_small(a: f64, p: f64) -> f64 {
    let c2 = a.cos().powi(2);
    let g = |phi: f64| {
        let s = ((a - phi).sin() * (a + phi).sin()).max(0.0);
        c2 * phi * phi.sin() * s.powf(p) / phi.cos().powf(2.0 * p + 3.0)
    };
    integrate_1d(g, 0.0, a, ABS_TOL, REL_TOL)
}

fn l_raw(a: f64, p: f64) -> f64 {
    if a <= 0.0 {
        0.0
    } else if a > FRAC_PI_2 {
        // the arccos form is undefined here; continue l through l' instead
        PI / (2.0 * p + 2.0) - l_raw(PI - a, p)
    } else if a <= FRAC_PI_4 {
        l_small(a, p)
    } else {
        l_direct(a, p)
    }
}

/// l(A) = ∫_{cos A}^1 x(1-x²)^p arccos(cos A / x) dx for A ∈ [0, π/2].
///
/// For A ∈ (π/2, π] the value is continued by l(A) = π/(2p+2) - l(π-A), the
/// unique extension with l'(A) = γ(p)·sin^{2p+2} A on all of [0, π].
pub fn l_of_a(a: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if !(0.0..=PI).contains(&a) {
        return Err(Error::invalid(format!("angle {a} outside [0, pi]")));
    }
    Ok(l_raw(a, p))
}

/// m(A) = 2R^{2p+2}(A/(2p+2) - l(A)): the integral of (R² - x² - y²)^p over
/// the isosceles triangle cut from the circumcircle by a chord seen under
/// the inscribed angle A.
pub fn m_sector(angle: f64, r: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if !(angle > 0.0 && angle < PI) {
        return Err(Error::invalid(format!("sector angle {angle} outside (0, pi)")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("circumradius must be positive, got {r}")));
    }
    Ok(2.0 * r.powf(2.0 * p + 2.0) * (angle / (2.0 * p + 2.0) - l_raw(angle, p)))
}

fn check_angles(a: f64, b: f64) -> Result<f64> {
    let c = PI - a - b;
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(Error::invalid(format!("angles ({a}, {b}) do not form a triangle")));
    }
    Ok(c)
}

/// Circumradius of the unit-area triangle with angles A, B, C.
pub fn unit_area_circumradius(a: f64, b: f64, c: f64) -> f64 {
    // sin 2A + sin 2B + sin 2C = 4 sin A sin B sin C, without cancellation
    (0.5 / (a.sin() * b.sin() * c.sin())).sqrt()
}

/// d(Q̄, T, L_p) for the unit-area triangle with angles A, B and C = π-A-B,
/// assembled from circumcircle sectors. An obtuse angle X contributes
/// -m(π-X); a right angle contributes m(π/2) = 0 in the acute sum.
pub fn d_unit_area(a: f64, b: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    let c = check_angles(a, b)?;
    Ok(d_from_l(a, b, c, l_reduced(a, p), l_reduced(b, p), l_reduced(c, p), p))
}

/// Z(A, B) = [π/(2p+2) - l(A) - l(B) - l(C)] / (sin 2A + sin 2B + sin 2C)^{p+1}
/// for acute triangles; equals d^p / 2^{p+2} at unit area.
pub fn z_objective(a: f64, b: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    let c = check_angles(a, b)?;
    if a >= FRAC_PI_2 || b >= FRAC_PI_2 || c >= FRAC_PI_2 {
        return Err(Error::invalid(format!("triangle with angles ({a}, {b}, {c}) is not acute")));
    }
    let num = PI / (2.0 * p + 2.0) - l_raw(a, p) - l_raw(b, p) - l_raw(c, p);
    let den = (2.0 * a).sin() + (2.0 * b).sin() + (2.0 * c).sin();
    Ok(num / den.powf(p + 1.0))
}

/// The three C_p^+ evaluations and the value reported for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpValue {
    pub p: f64,
    pub value_arccos_form: f64,
    pub value_beta_form: f64,
    pub value_quadrature: f64,
    /// The arccos form, which is the most accurate of the three.
    pub value: f64,
}

impl CpValue {
    /// Largest pairwise relative difference among the three evaluations.
    pub fn max_rel_discrepancy(&self) -> f64 {
        let v = [self.value_arccos_form, self.value_beta_form, self.value_quadrature];
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in i + 1..3 {
                worst = worst.max((v[i] - v[j]).abs() / v[i].abs().max(v[j].abs()));
            }
        }
        worst
    }
}

fn cp_scale(p: f64) -> f64 {
    (4.0 / (3.0 * 3f64.sqrt())).powf(1.0 + 1.0 / p)
}

/// Arccos-integral form of C_p^+ alone.
pub fn c_p_arccos(p: f64) -> Result<f64> {
    check_p(p)?;
    let inner = PI / (p + 1.0) - 6.0 * l_direct(FRAC_PI_3, p);
    Ok(cp_scale(p) * inner.powf(1.0 / p))
}

/// Incomplete-Beta form: π/(p+1) - (3/2)·B(p+1, ½)·B(¾; p+3/2, ½).
pub fn c_p_beta(p: f64) -> Result<f64> {
    check_p(p)?;
    let inner = PI / (p + 1.0) - 1.5 * beta(p + 1.0, 0.5)? * incomplete_beta(0.75, p + 1.5, 0.5)?;
    Ok(cp_scale(p) * inner.powf(1.0 / p))
}

/// Direct 2D quadrature of ∫_{T₀}(1 - x² - y²)^p over the equilateral
/// triangle inscribed in the unit circle.
pub fn c_p_quadrature(p: f64) -> Result<f64> {
    check_p(p)?;
    let t0 = make_equilateral(Point2::new(0.0, 0.0), 0.75 * 3f64.sqrt(), 0.0)?;
    let spec = QuadratureSpec { degree: 10, max_depth: 30, rel_tol: 1e-11 };
    let integral = integrate_triangle(|q: Point2| (1.0 - q.dot(q)).max(0.0).powf(p), &t0, &spec)?;
    Ok(cp_scale(p) * integral.powf(1.0 / p))
}

/// C_p^+ by all three routes.
pub fn c_p_plus(p: f64) -> Result<CpValue> {
    let value_arccos_form = c_p_arccos(p)?;
    Ok(CpValue {
        p,
        value_arccos_form,
        value_beta_form: c_p_beta(p)?,
        value_quadrature: c_p_quadrature(p)?,
        value: value_arccos_form,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    /// Right triangles with acute angle A.
    L,
    /// Isosceles triangles with base angles A ∈ [π/4, π/2).
    S,
    /// Isosceles triangles with base angles A ∈ (0, π/4], obtuse apex.
    STilde,
}

/// Error profile of a one-parameter triangle family, up to a constant factor.
pub fn appendix_profile(kind: ProfileKind, a: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    let l = |x: f64| l_raw(x, p);
    match kind {
        ProfileKind::L => {
            if !(a > 0.0 && a < FRAC_PI_2) {
                return Err(Error::invalid(format!("L(A) needs A in (0, pi/2), got {a}")));
            }
            let num = PI / (4.0 * p + 4.0) - l(a) - l(FRAC_PI_2 - a);
            Ok(num / (2.0 * a).sin().powf(p + 1.0))
        }
        ProfileKind::S => {
            if !(a >= FRAC_PI_4 && a < FRAC_PI_2) {
                return Err(Error::invalid(format!("S(A) needs A in [pi/4, pi/2), got {a}")));
            }
            let num = PI / (2.0 * p + 2.0) - 2.0 * l(a) - l(PI - 2.0 * a);
            Ok(num / isosceles_denominator(a).powf(p + 1.0))
        }
        ProfileKind::STilde => {
            if !(a > 0.0 && a <= FRAC_PI_4) {
                return Err(Error::invalid(format!("S~(A) needs A in (0, pi/4], got {a}")));
            }
            let num = l(2.0 * a) - 2.0 * l(a);
            Ok(num / isosceles_denominator(a).powf(p + 1.0))
        }
    }
}

// 2 sin 2A - sin 4A = 8 cos A sin³A, in the cancellation-free form
fn isosceles_denominator(a: f64) -> f64 {
    8.0 * a.cos() * a.sin().powi(3)
}

/// q(π/4) = γ(p)(1 - 2^{-p-1}) - (p+1)[π/(4p+4) - 2l(π/4)]; the S profile is
/// unimodal at π/3 when this is non-positive.
pub fn q_at_quarter_pi(p: f64) -> Result<f64> {
    let g = gamma_p(p)?;
    Ok(g * (1.0 - 2f64.powf(-p - 1.0)) - (p + 1.0) * (PI / (4.0 * p + 4.0) - 2.0 * l_raw(FRAC_PI_4, p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Proposition {
    /// z(t) = p t^{2p+6} - 2t^{2p+4} - (p+2)t^{2p+2} + (p+2)t⁴ + 2t² - p on [0, 1].
    One,
    /// z(t) = -(2p+1)t^{2p+4} + 2(p+2)t^{2p+2} + (p+1)t⁴ - (3p+4)t² + 2p on [0, 2].
    Two,
}

impl Proposition {
    pub fn interval(self) -> (f64, f64) {
        match self {
            Proposition::One => (0.0, 1.0),
            Proposition::Two => (0.0, 2.0),
        }
    }

    pub fn eval(self, t: f64, p: f64) -> f64 {
        let t2 = t * t;
        let tp = t.powf(2.0 * p + 2.0);
        match self {
            Proposition::One => {
                p * tp * t2 * t2 - 2.0 * tp * t2 - (p + 2.0) * tp + (p + 2.0) * t2 * t2 + 2.0 * t2 - p
            }
            Proposition::Two => {
                -(2.0 * p + 1.0) * tp * t2 + 2.0 * (p + 2.0) * tp + (p + 1.0) * t2 * t2 - (3.0 * p + 4.0) * t2
                    + 2.0 * p
            }
        }
    }
}

/// Samples with |z| at or below this are treated as zeros, not signs.
pub const SIGN_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignScanResult {
    pub kind: Proposition,
    pub p: f64,
    pub grid: usize,
    pub max_value: f64,
    pub argmax: f64,
    /// Grid intervals `[t_i, t_j]` across which z changes strict sign.
    pub sign_changes: Vec<[f64; 2]>,
}

/// Evaluates z on `grid` equispaced points and records its maximum and the
/// intervals where it changes sign. Both polynomials vanish exactly at
/// t = 1, where rounding leaves values of order 1e-16; such samples are
/// skipped when looking for sign changes.
pub fn z_sign_scan(kind: Proposition, p: f64, grid: usize) -> Result<SignScanResult> {
    check_p(p)?;
    if grid < 2 {
        return Err(Error::invalid("sign scan needs at least 2 grid points"));
    }
    let (lo, hi) = kind.interval();
    let step = (hi - lo) / (grid - 1) as f64;
    let mut max_value = f64::NEG_INFINITY;
    let mut argmax = lo;
    let mut sign_changes = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for i in 0..grid {
        let t = if i + 1 == grid { hi } else { lo + i as f64 * step };
        let z = kind.eval(t, p);
        if z > max_value {
            max_value = z;
            argmax = t;
        }
        if z.abs() <= SIGN_ZERO_TOL {
            continue;
        }
        if let Some((tl, zl)) = last {
            if zl.signum() != z.signum() {
                sign_changes.push([tl, t]);
            }
        }
        last = Some((t, z));
    }
    Ok(SignScanResult { kind, p, grid, max_value, argmax, sign_changes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeSample {
    pub a: f64,
    pub b: f64,
    pub d_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeScanResult {
    pub p: f64,
    pub grid: usize,
    /// Margin kept from the boundary of the angle simplex.
    pub delta: f64,
    /// Step of the refinement pass around the coarse minimum.
    pub refined_step: f64,
    pub a_star: f64,
    pub b_star: f64,
    pub min_value: f64,
    pub table: Option<Vec<ShapeSample>>,
}

impl ShapeScanResult {
    /// Coarse grid as CSV with header `A,B,d_value`.
    pub fn table_csv(&self) -> String {
        let mut out = String::from("A,B,d_value\n");
        for s in self.table.iter().flatten() {
            out.push_str(&format!("{},{},{}\n", s.a, s.b, s.d_value));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeScanOptions {
    pub delta: f64,
    pub keep_table: bool,
}

impl Default for ShapeScanOptions {
    fn default() -> Self {
        Self { delta: 0.01, keep_table: false }
    }
}

// d for a unit-area triangle from cached l values. With l continued past
// π/2 the acute and obtuse sector sums collapse to one expression.
fn d_from_l(a: f64, b: f64, c: f64, la: f64, lb: f64, lc: f64, p: f64) -> f64 {
    let r2 = unit_area_circumradius(a, b, c).powi(2);
    // l of an obtuse angle X enters as π/(2p+2) - l(π - X), and the
    // constant then cancels exactly
    let bracket = if a > FRAC_PI_2 {
        la - lb - lc
    } else if b > FRAC_PI_2 {
        lb - la - lc
    } else if c > FRAC_PI_2 {
        lc - la - lb
    } else {
        PI / (2.0 * p + 2.0) - la - lb - lc
    };
    (2.0 * r2.powf(p + 1.0) * bracket).max(0.0).powf(1.0 / p)
}

// l(X) for X ≤ π/2 and l(π - X) beyond, as expected by `d_from_l`.
fn l_reduced(x: f64, p: f64) -> f64 {
    if x > FRAC_PI_2 { l_raw(PI - x, p) } else { l_raw(x, p) }
}

// Scans A = a0 + i·h, B = b0 + j·h for i, j < n, skipping points with
// C = π - A - B below `c_min`. Returns the minimum (ties go to smaller A,
// then smaller B) and optionally every sample.
fn scan_grid(
    p: f64,
    a0: f64,
    b0: f64,
    h: f64,
    n: usize,
    c_min: f64,
    keep: bool,
) -> ((f64, f64, f64), Vec<ShapeSample>) {
    let la: Vec<f64> = (0..n).into_par_iter().map(|i| l_reduced(a0 + i as f64 * h, p)).collect();
    let lb: Vec<f64> = (0..n).into_par_iter().map(|j| l_reduced(b0 + j as f64 * h, p)).collect();
    let c0 = PI - a0 - b0;
    let lc: Vec<f64> = (0..2 * n)
        .into_par_iter()
        .map(|k| {
            let c = c0 - k as f64 * h;
            if c > 0.0 { l_reduced(c, p) } else { 0.0 }
        })
        .collect();
    let rows: Vec<((f64, f64, f64), Vec<ShapeSample>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = a0 + i as f64 * h;
            let mut best = (f64::INFINITY, a, f64::NAN);
            let mut samples = Vec::new();
            for j in 0..n {
                let b = b0 + j as f64 * h;
                let c = c0 - (i + j) as f64 * h;
                if a <= 0.0 || b <= 0.0 || c < c_min - 1e-12 {
                    continue;
                }
                let d = d_from_l(a, b, c, la[i], lb[j], lc[i + j], p);
                if d < best.0 {
                    best = (d, a, b);
                }
                if keep {
                    samples.push(ShapeSample { a, b, d_value: d });
                }
            }
            (best, samples)
        })
        .collect();
    let mut best = (f64::INFINITY, f64::NAN, f64::NAN);
    let mut table = Vec::new();
    for (row_best, samples) in rows {
        if row_best.0 < best.0 {
            best = row_best;
        }
        table.extend(samples);
    }
    (best, table)
}

/// Brute-force minimization of d(Q̄, T, L_p) over unit-area triangles
/// parameterized by two angles, on the default options.
pub fn optimize_shape(p: f64, grid: usize) -> Result<ShapeScanResult> {
    optimize_shape_with(p, grid, ShapeScanOptions::default())
}

/// Coarse scan of {A, B > δ, A + B < π - δ} with step h = (π - 3δ)/grid,
/// then a pass with step h/10 over the ±2h window around the coarse minimum.
pub fn optimize_shape_with(p: f64, grid: usize, opts: ShapeScanOptions) -> Result<ShapeScanResult> {
    check_p(p)?;
    if grid < 3 {
        return Err(Error::invalid("shape scan grid must have at least 3 steps"));
    }
    let delta = opts.delta;
    if !(delta > 0.0 && 3.0 * delta < PI) {
        return Err(Error::invalid(format!("simplex margin {delta} out of range")));
    }
    let h = (PI - 3.0 * delta) / grid as f64;
    let ((_, ac, bc), table) = scan_grid(p, delta, delta, h, grid + 1, delta, opts.keep_table);
    let fine = h / 10.0;
    let a0 = (ac - 2.0 * h).max(delta);
    let b0 = (bc - 2.0 * h).max(delta);
    let ((min_value, a_star, b_star), _) = scan_grid(p, a0, b0, fine, 41, delta, false);
    Ok(ShapeScanResult {
        p,
        grid,
        delta,
        refined_step: fine,
        a_star,
        b_star,
        min_value,
        table: opts.keep_table.then_some(table),
    })
}
