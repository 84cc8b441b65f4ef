//! Scalar fields with second derivatives, weights, the modulus of continuity
//! of the second derivatives and the asymptotic error limit.

mod expr;

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

pub use expr::{BinOp, Expr, Func};

use crate::constants::c_p_arccos;
use crate::error::{Error, Result};
use crate::geometry::{Point2, Square};
use crate::norms::PlaneFn;
use crate::quadform::QuadraticForm;
use crate::quadrature::{integrate_triangle, QuadratureSpec};

/// Finite-difference step for parsed expressions.
pub const FD_STEP: f64 = 1e-4;
/// Grid size of the admissibility check.
pub const ADMISSIBILITY_GRID: usize = 64;

#[derive(Debug, Clone)]
enum FieldKind {
    Paraboloid,
    Quadratic(QuadraticForm),
    CoshSum,
    ExpProduct,
    Expr(Expr),
}

#[derive(Debug)]
struct FieldInner {
    kind: FieldKind,
    scale: f64,
    name: String,
    bounds: OnceLock<Result<FieldBounds>>,
}

/// Sup-norms of the second derivatives and the Hessian floor on D = [0,1]².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldBounds {
    /// min H(f; x, y) over the grid.
    pub c_plus: f64,
    pub fxx_sup: f64,
    pub fxy_sup: f64,
    pub fyy_sup: f64,
    /// +1 for convex fields, -1 for concave ones.
    pub sign: f64,
}

/// A smooth function on D = [0,1]² with its first and second derivatives.
/// Cheap to clone and safe to share between threads.
#[derive(Debug, Clone)]
pub struct ScalarField {
    inner: Arc<FieldInner>,
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.inner.name)
    }
}

fn second_fd(e: &Expr, x: f64, y: f64, h: f64) -> Result<[f64; 3]> {
    let f = |dx: f64, dy: f64| e.eval(x + dx, y + dy);
    let c = f(0.0, 0.0)?;
    let fxx = (f(h, 0.0)? - 2.0 * c + f(-h, 0.0)?) / (h * h);
    let fyy = (f(0.0, h)? - 2.0 * c + f(0.0, -h)?) / (h * h);
    let fxy = (f(h, h)? - f(h, -h)? - f(-h, h)? + f(-h, -h)?) / (4.0 * h * h);
    Ok([fxx, fxy, fyy])
}

fn first_fd(e: &Expr, x: f64, y: f64, h: f64) -> Result<[f64; 2]> {
    let f = |dx: f64, dy: f64| e.eval(x + dx, y + dy);
    Ok([(f(h, 0.0)? - f(-h, 0.0)?) / (2.0 * h), (f(0.0, h)? - f(0.0, -h)?) / (2.0 * h)])
}

// One Richardson step on central differences with steps h and 2h.
fn richardson<const N: usize>(fine: [f64; N], coarse: [f64; N]) -> [f64; N] {
    std::array::from_fn(|i| (4.0 * fine[i] - coarse[i]) / 3.0)
}

impl ScalarField {
    fn with_kind(kind: FieldKind, name: String) -> ScalarField {
        ScalarField { inner: Arc::new(FieldInner { kind, scale: 1.0, name, bounds: OnceLock::new() }) }
    }

    /// Builtin field by name: `paraboloid`, `cosh_sum`, `exp_product` or
    /// `quadratic(A,B,C)`. The field is checked for admissibility.
    pub fn builtin(name: &str) -> Result<ScalarField> {
        let field = Self::builtin_unchecked(name)?;
        field.check_admissible()?;
        Ok(field)
    }

    fn builtin_unchecked(name: &str) -> Result<ScalarField> {
        let name = name.trim();
        let kind = match name {
            "paraboloid" => FieldKind::Paraboloid,
            "cosh_sum" => FieldKind::CoshSum,
            "exp_product" => FieldKind::ExpProduct,
            _ => {
                let args = name
                    .strip_prefix("quadratic(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| Error::UnknownField(name.to_string()))?;
                let v: Vec<f64> = args
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::UnknownField(name.to_string()))?;
                let [a, b, c] = v[..] else {
                    return Err(Error::UnknownField(name.to_string()));
                };
                FieldKind::Quadratic(QuadraticForm::new(a, b, c))
            }
        };
        Ok(Self::with_kind(kind, format!("builtin:{name}")))
    }

    /// Q(x, y) = Ax² + By² + 2Cxy as a field.
    pub fn quadratic(a: f64, b: f64, c: f64) -> Result<ScalarField> {
        Self::builtin(&format!("quadratic({a},{b},{c})"))
    }

    /// Parses an expression in x and y and checks admissibility. Second
    /// derivatives come from central differences.
    pub fn parse_expression(src: &str) -> Result<ScalarField> {
        let field = Self::expression_unchecked(src)?;
        field.check_admissible()?;
        Ok(field)
    }

    /// Parses an expression without the admissibility check.
    pub fn expression_unchecked(src: &str) -> Result<ScalarField> {
        let e = Expr::parse(src)?;
        Ok(Self::with_kind(FieldKind::Expr(e), format!("expr:{src}")))
    }

    /// `builtin:NAME` or `expr:SRC`.
    pub fn from_spec(spec: &str) -> Result<ScalarField> {
        if let Some(name) = spec.strip_prefix("builtin:") {
            Self::builtin(name)
        } else if let Some(src) = spec.strip_prefix("expr:") {
            Self::parse_expression(src)
        } else {
            Err(Error::UnknownField(format!("{spec} (expected builtin:NAME or expr:SRC)")))
        }
    }

    /// k·f. Admissibility is unaffected for k ≠ 0.
    pub fn scaled(&self, k: f64) -> Result<ScalarField> {
        if !(k.is_finite() && k != 0.0) {
            return Err(Error::invalid(format!("scale factor must be finite and nonzero, got {k}")));
        }
        Ok(ScalarField {
            inner: Arc::new(FieldInner {
                kind: self.inner.kind.clone(),
                scale: self.inner.scale * k,
                name: format!("{k}*({})", self.inner.name),
                bounds: OnceLock::new(),
            }),
        })
    }

    pub fn name(&self) -> &str {
        &self.inner.name
    }

    /// True when derivatives are exact rather than finite differences.
    pub fn has_analytic_derivatives(&self) -> bool {
        !matches!(self.inner.kind, FieldKind::Expr(_))
    }

    pub fn has_constant_hessian(&self) -> bool {
        matches!(self.inner.kind, FieldKind::Paraboloid | FieldKind::Quadratic(_))
    }

    pub fn try_value(&self, p: Point2) -> Result<f64> {
        let (x, y) = (p.x, p.y);
        let v = match &self.inner.kind {
            FieldKind::Paraboloid => x * x + y * y,
            FieldKind::Quadratic(q) => q.eval(p),
            FieldKind::CoshSum => x.cosh() + y.cosh(),
            FieldKind::ExpProduct => (x + y).exp() + x * x + y * y,
            FieldKind::Expr(e) => e.eval(x, y)?,
        };
        Ok(self.inner.scale * v)
    }

    /// f(p), or NaN where the expression is undefined.
    pub fn value(&self, p: Point2) -> f64 {
        self.try_value(p).unwrap_or(f64::NAN)
    }

    pub fn try_gradient(&self, p: Point2) -> Result<[f64; 2]> {
        let (x, y) = (p.x, p.y);
        let g = match &self.inner.kind {
            FieldKind::Paraboloid => [2.0 * x, 2.0 * y],
            FieldKind::Quadratic(q) => [2.0 * (q.a * x + q.c * y), 2.0 * (q.b * y + q.c * x)],
            FieldKind::CoshSum => [x.sinh(), y.sinh()],
            FieldKind::ExpProduct => {
                let e = (x + y).exp();
                [e + 2.0 * x, e + 2.0 * y]
            }
            FieldKind::Expr(e) => richardson(first_fd(e, x, y, FD_STEP)?, first_fd(e, x, y, 2.0 * FD_STEP)?),
        };
        Ok(g.map(|v| self.inner.scale * v))
    }

    pub fn gradient(&self, p: Point2) -> [f64; 2] {
        self.try_gradient(p).unwrap_or([f64::NAN; 2])
    }

    /// [f_xx, f_xy, f_yy] at `p`.
    pub fn try_second(&self, p: Point2) -> Result<[f64; 3]> {
        let (x, y) = (p.x, p.y);
        let s = match &self.inner.kind {
            FieldKind::Paraboloid => [2.0, 0.0, 2.0],
            FieldKind::Quadratic(q) => [2.0 * q.a, 2.0 * q.c, 2.0 * q.b],
            FieldKind::CoshSum => [x.cosh(), 0.0, y.cosh()],
            FieldKind::ExpProduct => {
                let e = (x + y).exp();
                [e + 2.0, e, e + 2.0]
            }
            FieldKind::Expr(e) => richardson(second_fd(e, x, y, FD_STEP)?, second_fd(e, x, y, 2.0 * FD_STEP)?),
        };
        Ok(s.map(|v| self.inner.scale * v))
    }

    pub fn second(&self, p: Point2) -> [f64; 3] {
        self.try_second(p).unwrap_or([f64::NAN; 3])
    }

    /// H(f; x, y) = f_xx f_yy - f_xy².
    pub fn hessian(&self, p: Point2) -> f64 {
        let [fxx, fxy, fyy] = self.second(p);
        fxx * fyy - fxy * fxy
    }

    /// The quadratic part ½f_xx x² + f_xy xy + ½f_yy y² of the Taylor
    /// polynomial at `p`.
    pub fn local_form(&self, p: Point2) -> Result<QuadraticForm> {
        let [fxx, fxy, fyy] = self.try_second(p)?;
        Ok(QuadraticForm::new(0.5 * fxx, 0.5 * fyy, 0.5 * fxy))
    }

    /// Checks H > 0 and a constant sign of f_xx on a 64×64 grid of D.
    pub fn check_admissible(&self) -> Result<()> {
        let n = ADMISSIBILITY_GRID;
        let mut sign = 0.0;
        for i in 0..n {
            for j in 0..n {
                let p = grid_point(i, j, n);
                let [fxx, fxy, fyy] = self.try_second(p)?;
                let h = fxx * fyy - fxy * fxy;
                if !h.is_finite() {
                    return Err(Error::EvalError(format!("non-finite Hessian at ({}, {})", p.x, p.y)));
                }
                if h <= 0.0 {
                    return Err(Error::NotAdmissible(format!(
                        "{}: Hessian {h} <= 0 at ({}, {})",
                        self.name(),
                        p.x,
                        p.y
                    )));
                }
                let s = fxx.signum();
                if sign == 0.0 {
                    sign = s;
                } else if s != sign {
                    return Err(Error::NotAdmissible(format!("{}: f_xx changes sign", self.name())));
                }
            }
        }
        Ok(())
    }

    /// Hessian floor and sup-norms from a 256×256 grid, accepted only if a
    /// 128×128 grid agrees to 1%. Computed once per field.
    pub fn bounds(&self) -> Result<FieldBounds> {
        self.inner.bounds.get_or_init(|| self.compute_bounds()).clone()
    }

    fn compute_bounds(&self) -> Result<FieldBounds> {
        self.check_admissible()?;
        let fine = self.grid_bounds(256)?;
        let coarse = self.grid_bounds(128)?;
        let pairs = [
            ("C+", fine.c_plus, coarse.c_plus),
            ("|f_xx|", fine.fxx_sup, coarse.fxx_sup),
            ("|f_xy|", fine.fxy_sup, coarse.fxy_sup),
            ("|f_yy|", fine.fyy_sup, coarse.fyy_sup),
        ];
        // entries that are zero up to finite-difference noise compare absolutely
        let noise = 1e-6 * fine.fxx_sup.max(fine.fyy_sup);
        for (what, f, c) in pairs {
            if (f - c).abs() > (0.01 * f.abs().max(c.abs())).max(noise) {
                return Err(Error::NotAdmissible(format!(
                    "{}: {what} differs between 128 and 256 grids ({c} vs {f}); field too rough",
                    self.name()
                )));
            }
        }
        Ok(fine)
    }

    fn grid_bounds(&self, n: usize) -> Result<FieldBounds> {
        let mut b = FieldBounds { c_plus: f64::INFINITY, fxx_sup: 0.0, fxy_sup: 0.0, fyy_sup: 0.0, sign: 0.0 };
        for i in 0..n {
            for j in 0..n {
                let [fxx, fxy, fyy] = self.try_second(grid_point(i, j, n))?;
                b.c_plus = b.c_plus.min(fxx * fyy - fxy * fxy);
                b.fxx_sup = b.fxx_sup.max(fxx.abs());
                b.fxy_sup = b.fxy_sup.max(fxy.abs());
                b.fyy_sup = b.fyy_sup.max(fyy.abs());
                if b.sign == 0.0 {
                    b.sign = fxx.signum();
                }
            }
        }
        Ok(b)
    }
}

impl PlaneFn for ScalarField {
    fn eval(&self, p: Point2) -> f64 {
        self.value(p)
    }
}

fn grid_point(i: usize, j: usize, n: usize) -> Point2 {
    let s = (n - 1) as f64;
    Point2::new(i as f64 / s, j as f64 / s)
}

/// A positive continuous weight Ω on D.
#[derive(Debug, Clone)]
pub enum WeightField {
    Constant(f64),
    Expr { src: String, expr: Arc<Expr> },
}

impl Default for WeightField {
    fn default() -> Self {
        WeightField::Constant(1.0)
    }
}

impl fmt::Display for WeightField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightField::Constant(c) => write!(f, "expr:{c}"),
            WeightField::Expr { src, .. } => write!(f, "expr:{src}"),
        }
    }
}

impl WeightField {
    /// `expr:SRC`; constant expressions become [`WeightField::Constant`].
    /// Positivity is checked on a 64×64 grid.
    pub fn from_spec(spec: &str) -> Result<WeightField> {
        let src = spec
            .strip_prefix("expr:")
            .ok_or_else(|| Error::UnknownField(format!("{spec} (weights use expr:SRC)")))?;
        Self::parse(src)
    }

    pub fn parse(src: &str) -> Result<WeightField> {
        let expr = Expr::parse(src)?;
        let w = match expr {
            Expr::Num(c) => WeightField::Constant(c),
            expr => WeightField::Expr { src: src.to_string(), expr: Arc::new(expr) },
        };
        w.check_positive()?;
        Ok(w)
    }

    pub fn try_value(&self, p: Point2) -> Result<f64> {
        match self {
            WeightField::Constant(c) => Ok(*c),
            WeightField::Expr { expr, .. } => expr.eval(p.x, p.y),
        }
    }

    pub fn value(&self, p: Point2) -> f64 {
        self.try_value(p).unwrap_or(f64::NAN)
    }

    /// k·Ω.
    pub fn scaled(&self, k: f64) -> Result<WeightField> {
        match self {
            WeightField::Constant(c) => Ok(WeightField::Constant(c * k)),
            WeightField::Expr { src, .. } => Self::parse(&format!("{k} * ({src})")),
        }
    }

    pub fn check_positive(&self) -> Result<()> {
        let n = ADMISSIBILITY_GRID;
        for i in 0..n {
            for j in 0..n {
                let p = grid_point(i, j, n);
                let v = self.try_value(p)?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::NotAdmissible(format!("weight {self} is {v} at ({}, {})", p.x, p.y)));
                }
            }
        }
        Ok(())
    }

    /// Largest value over a 16×16 grid on `cell` (corners included).
    pub fn sup_on(&self, cell: &Square) -> Result<f64> {
        if let WeightField::Constant(c) = self {
            return Ok(*c);
        }
        let mut best = f64::NEG_INFINITY;
        for i in 0..16 {
            for j in 0..16 {
                let p = Point2::new(
                    cell.x0 + cell.width() * i as f64 / 15.0,
                    cell.y0 + cell.height() * j as f64 / 15.0,
                );
                best = best.max(self.try_value(p)?);
            }
        }
        Ok(best)
    }
}

impl PlaneFn for WeightField {
    fn eval(&self, p: Point2) -> f64 {
        self.value(p)
    }
}

/// Sampled modulus of continuity of the second derivatives:
/// max over g ∈ {f_xx, f_xy, f_yy} of |g(P) - g(P')| with P on a 64×64 grid
/// of D and P' = P + (s, t), s, t ∈ {0, ±δ/2, ±δ}, P' ∈ D.
pub fn modulus_estimate(field: &ScalarField, delta: f64) -> Result<f64> {
    ModulusEstimator::new(field)?.omega(delta)
}

/// Reusable modulus estimator that keeps the second derivatives on the base
/// grid.
pub struct ModulusEstimator<'a> {
    field: &'a ScalarField,
    base: Vec<(Point2, [f64; 3])>,
    constant: bool,
}

impl<'a> ModulusEstimator<'a> {
    pub fn new(field: &'a ScalarField) -> Result<Self> {
        let n = ADMISSIBILITY_GRID;
        let mut base = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let p = grid_point(i, j, n);
                base.push((p, field.try_second(p)?));
            }
        }
        let constant = field.has_constant_hessian();
        Ok(ModulusEstimator { field, base, constant })
    }

    pub fn omega(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::invalid(format!("modulus step must be in (0, 1], got {delta}")));
        }
        if self.constant {
            return Ok(0.0);
        }
        let offs = [-delta, -0.5 * delta, 0.0, 0.5 * delta, delta];
        let mut best: f64 = 0.0;
        for (p, g) in &self.base {
            for &s in &offs {
                for &t in &offs {
                    if s == 0.0 && t == 0.0 {
                        continue;
                    }
                    let q = Point2::new(p.x + s, p.y + t);
                    if !(0.0..=1.0).contains(&q.x) || !(0.0..=1.0).contains(&q.y) {
                        continue;
                    }
                    let h = self.field.try_second(q)?;
                    for k in 0..3 {
                        best = best.max((g[k] - h[k]).abs());
                    }
                }
            }
        }
        Ok(best)
    }
}

/// D⁺ = (C⁺/2)·min(1/‖f_xx‖, 1/‖f_yy‖): a floor for |∂²f/∂n²| over unit
/// directions n.
pub fn directional_floor(field: &ScalarField) -> Result<f64> {
    let b = field.bounds()?;
    Ok(0.5 * b.c_plus * (1.0 / b.fxx_sup).min(1.0 / b.fyy_sup))
}

/// The limit of N·(best error) as N → ∞:
/// (C_p^+/2)·(∫_D H^{p/(2(p+1))} Ω^{p/(p+1)})^{(p+1)/p}.
pub fn theoretical_limit(field: &ScalarField, weight: &impl PlaneFn, p: f64, spec: &QuadratureSpec) -> Result<f64> {
    let cp = c_p_arccos(p)?;
    let e1 = p / (2.0 * (p + 1.0));
    let e2 = p / (p + 1.0);
    let integrand = |q: Point2| field.hessian(q).abs().powf(e1) * weight.eval(q).powf(e2);
    let mut total = 0.0;
    for t in Square::unit().diagonal_split() {
        total += integrate_triangle(integrand, &t, spec)?;
    }
    if !total.is_finite() {
        return Err(Error::EvalError("limit integrand is not finite on D".into()));
    }
    Ok(0.5 * cp * total.powf(1.0 / e2))
}
