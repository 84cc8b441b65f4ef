//! Quadratic forms Q = Ax² + By² + 2Cxy, their canonical affine map and
//! the triangles that minimize their interpolation error.

use serde::{Deserialize, Serialize};

use crate::constants::c_p_arccos;
use crate::error::{Error, Result};
use crate::geometry::{make_equilateral, Point2, Triangle};
use crate::norms::{cell_error_unweighted, PlaneFn};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadraticForm {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        QuadraticForm { a, b, c }
    }

    /// Q̄ = x² + y².
    pub const fn unit() -> Self {
        QuadraticForm { a: 1.0, b: 1.0, c: 0.0 }
    }

    pub fn eval(&self, p: Point2) -> f64 {
        self.a * p.x * p.x + self.b * p.y * p.y + 2.0 * self.c * p.x * p.y
    }

    /// AB - C².
    pub fn det(&self) -> f64 {
        self.a * self.b - self.c * self.c
    }

    /// Hessian determinant of Q as a function: 4(AB - C²).
    pub fn hessian(&self) -> f64 {
        4.0 * self.det()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a > 0.0 && self.det() > 0.0
    }

    pub fn scaled(&self, k: f64) -> Self {
        QuadraticForm { a: k * self.a, b: k * self.b, c: k * self.c }
    }

    fn require_pd(&self) -> Result<()> {
        if self.is_positive_definite() && self.a.is_finite() && self.b.is_finite() && self.c.is_finite() {
            Ok(())
        } else {
            Err(Error::NotPositiveDefinite { a: self.a, b: self.b, c: self.c })
        }
    }
}

impl PlaneFn for QuadraticForm {
    fn eval(&self, p: Point2) -> f64 {
        QuadraticForm::eval(self, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Unit eigenvector for `lambda_max`; (-ξ₂, ξ₁) belongs to `lambda_min`.
    pub xi: [f64; 2],
}

/// Eigenvalues and the leading eigenvector of the matrix [[A, C], [C, B]].
/// Equal eigenvalues give ξ = (1, 0).
pub fn eigen_decompose(q: &QuadraticForm) -> Result<EigenData> {
    q.require_pd()?;
    let mean = 0.5 * (q.a + q.b);
    let half_diff = 0.5 * (q.a - q.b);
    let root = half_diff.hypot(q.c);
    let lambda_max = mean + root;
    // the product form avoids cancellation in mean - root
    let lambda_min = q.det() / lambda_max;
    let xi = if root == 0.0 {
        [1.0, 0.0]
    } else {
        // rows of (M - λ_max I); the null vector is orthogonal to the larger one
        let r1 = [q.a - lambda_max, q.c];
        let r2 = [q.c, q.b - lambda_max];
        let r = if r1[0].hypot(r1[1]) >= r2[0].hypot(r2[1]) { r1 } else { r2 };
        let v = [-r[1], r[0]];
        let n = v[0].hypot(v[1]);
        let v = [v[0] / n, v[1] / n];
        // fix the sign: first nonzero component positive
        if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
            [-v[0], -v[1]]
        } else {
            v
        }
    };
    Ok(EigenData { lambda_min, lambda_max, xi })
}

/// x ↦ M·x + t with an invertible 2×2 matrix M (row major).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub m: [[f64; 2]; 2],
    pub t: Point2,
    det: f64,
}

impl AffineMap {
    pub fn new(m: [[f64; 2]; 2], t: Point2) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if !(det.is_finite() && det != 0.0) {
            return Err(Error::invalid(format!("affine map is singular (det = {det})")));
        }
        Ok(AffineMap { m, t, det })
    }

    pub fn identity() -> Self {
        AffineMap { m: [[1.0, 0.0], [0.0, 1.0]], t: Point2::new(0.0, 0.0), det: 1.0 }
    }

    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        AffineMap { m: [[c, -s], [s, c]], t: Point2::new(0.0, 0.0), det: 1.0 }
    }

    pub fn scaling(sx: f64, sy: f64) -> Result<Self> {
        Self::new([[sx, 0.0], [0.0, sy]], Point2::new(0.0, 0.0))
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        Point2::new(
            self.m[0][0] * p.x + self.m[0][1] * p.y + self.t.x,
            self.m[1][0] * p.x + self.m[1][1] * p.y + self.t.y,
        )
    }

    pub fn inverse(&self) -> Result<Self> {
        let d = self.det;
        let m = [[self.m[1][1] / d, -self.m[0][1] / d], [-self.m[1][0] / d, self.m[0][0] / d]];
        let t = Point2::new(-(m[0][0] * self.t.x + m[0][1] * self.t.y), -(m[1][0] * self.t.x + m[1][1] * self.t.y));
        Self::new(m, t)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        let a = &self.m;
        let b = &other.m;
        let m = [
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ];
        let t = self.apply(other.t);
        AffineMap { m, t, det: self.det * other.det }
    }
}

/// F = F1∘F2 with F1 the rotation onto the eigenvector frame and F2 the
/// scaling by 1/√λ along each axis, so that Q(F(u, v)) = u² + v².
pub fn canonical_map(q: &QuadraticForm) -> Result<AffineMap> {
    let e = eigen_decompose(q)?;
    let [x1, x2] = e.xi;
    let f1 = AffineMap::new([[x1, -x2], [x2, x1]], Point2::new(0.0, 0.0))?;
    let f2 = AffineMap::scaling(1.0 / e.lambda_max.sqrt(), 1.0 / e.lambda_min.sqrt())?;
    Ok(f1.compose(&f2))
}

/// Image under the canonical map of an equilateral triangle centered at the
/// origin, sized so that the image has the requested area.
pub fn optimal_triangle(q: &QuadraticForm, area: f64, orientation: f64) -> Result<Triangle> {
    if !(area > 0.0 && area.is_finite()) {
        return Err(Error::invalid(format!("area must be positive, got {area}")));
    }
    let f = canonical_map(q)?;
    let pre = make_equilateral(Point2::new(0.0, 0.0), area / f.det().abs(), orientation)?;
    Ok(pre.map(|v| f.apply(v)))
}

/// C_p^+ |T|^{1+1/p} √(λ_min λ_max) against d(Q, T, L_p).
pub fn lower_bound(q: &QuadraticForm, t: &Triangle, p: f64) -> Result<(f64, f64)> {
    q.require_pd()?;
    let bound = c_p_arccos(p)? * t.area().powf(1.0 + 1.0 / p) * q.det().sqrt();
    let actual = cell_error_unweighted(q, t, p)?;
    Ok((bound, actual))
}

/// (A⁺+B⁺)/2 - √(((A⁺+B⁺)/2)² - C⁺): the smallest possible λ_min of a form
/// with A, B ≤ A⁺, B⁺ and AB - C² ≥ C⁺.
pub fn lambda_min_floor(a_plus: f64, b_plus: f64, c_plus: f64) -> Result<f64> {
    if !(a_plus > 0.0 && b_plus > 0.0 && c_plus > 0.0 && c_plus <= a_plus * b_plus) {
        return Err(Error::invalid(format!(
            "need A+, B+ > 0 and 0 < C+ <= A+ B+, got ({a_plus}, {b_plus}, {c_plus})"
        )));
    }
    let m = 0.5 * (a_plus + b_plus);
    // c_plus / (m + root) is the same number without cancellation
    Ok(c_plus / (m + (m * m - c_plus).max(0.0).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AspectCheck {
    /// diam of the unit-area optimal triangle.
    pub ratio: f64,
    /// Unit-area equilateral diameter times √(λ_max/λ_min).
    pub bound: f64,
}

pub fn aspect_ratio_bound_check(q: &QuadraticForm) -> Result<AspectCheck> {
    let e = eigen_decompose(q)?;
    let t = optimal_triangle(q, 1.0, 0.0)?;
    let side = 2.0 / 3f64.powf(0.25);
    Ok(AspectCheck { ratio: t.diameter(), bound: side * (e.lambda_max / e.lambda_min).sqrt() })
}
