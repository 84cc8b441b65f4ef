//! Convergence studies of N·error against the asymptotic limit, the uniform
//! baseline, and the appendix sign and monotonicity checks.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constants::{appendix_profile, c_p_arccos, q_at_quarter_pi, z_sign_scan, ProfileKind, Proposition, SignScanResult};
use crate::error::{Error, Result};
use crate::fields::{theoretical_limit, ScalarField, WeightField};
use crate::geometry::{validate_triangulation, Triangulation};
use crate::meshgen::{build_mesh, uniform_mesh, DEFAULT_EPSILON};
use crate::norms::{global_error_unchecked, ErrorValue};
use crate::quadrature::QuadratureSpec;

pub const DEFAULT_N_LIST: [usize; 6] = [250, 500, 1000, 2000, 4000, 8000];

pub const CSV_HEADER: &str = "N_requested,N_actual,epsilon,error,N_times_error,limit,ratio";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N_requested")]
    pub n_requested: usize,
    #[serde(rename = "N_actual")]
    pub n_actual: usize,
    pub epsilon: f64,
    pub error: f64,
    #[serde(rename = "N_times_error")]
    pub n_times_error: f64,
    pub limit: f64,
    pub ratio: f64,
}

/// Per-row data beyond the CSV columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDetails {
    #[serde(rename = "N_requested")]
    pub n_requested: usize,
    pub m: usize,
    /// Triangles touching a cell side.
    pub n1_bar: usize,
    /// False if some triangle integral stopped at the depth cap.
    pub converged: bool,
    pub conformity_violations: usize,
    pub hanging_vertices: usize,
    /// (Σ_T (C_p⁺ Ω √det |T|^{1+1/p})^p)^{1/p} ≤ error, for constant-Hessian
    /// fields and constant weights.
    pub certified_lower_bound: Option<f64>,
}

/// The same quantities on `uniform_mesh(N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    #[serde(rename = "N_requested")]
    pub n_requested: usize,
    #[serde(rename = "N_actual")]
    pub n_actual: usize,
    pub error: f64,
    #[serde(rename = "N_times_error")]
    pub n_times_error: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFailure {
    #[serde(rename = "N_requested")]
    pub n_requested: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub field: String,
    pub weight: String,
    pub p: f64,
    pub epsilon: f64,
    pub quadrature: QuadratureSpec,
    /// SHA-256 of the report serialized with this field empty.
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<ConvergenceRow>,
    pub details: Vec<RowDetails>,
    pub baseline: Vec<BaselineRow>,
    pub failures: Vec<RowFailure>,
}

impl ConvergenceReport {
    fn compute_hash(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.metadata.hash.clear();
        let bytes = serde_json::to_vec(&copy)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    pub fn verify_hash(&self) -> Result<bool> {
        Ok(self.compute_hash()? == self.metadata.hash)
    }

    /// A report for `field` with no rows.
    pub fn empty(field: &ScalarField, weight: &WeightField, p: f64, epsilon: f64, spec: QuadratureSpec) -> Result<Self> {
        let mut r = ConvergenceReport {
            metadata: ReportMetadata {
                field: field.name().to_string(),
                weight: weight.to_string(),
                p,
                epsilon,
                quadrature: spec,
                hash: String::new(),
            },
            rows: Vec::new(),
            details: Vec::new(),
            baseline: Vec::new(),
            failures: Vec::new(),
        };
        r.metadata.hash = r.compute_hash()?;
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Serializes a report. Floats use the shortest round-trip representation,
/// so equal reports give equal bytes.
pub fn report_write(report: &ConvergenceReport, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        ReportFormat::Csv => {
            let mut s = String::from(CSV_HEADER);
            s.push('\n');
            for r in &report.rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.n_requested, r.n_actual, r.epsilon, r.error, r.n_times_error, r.limit, r.ratio
                ));
            }
            Ok(s.into_bytes())
        }
    }
}

pub fn report_read_json(src: &str) -> Result<ConvergenceReport> {
    Ok(serde_json::from_str(src)?)
}

/// Σ_T (c·|T|^{1+1/p})^p with c = C_p⁺·Ω·√det, rooted; a lower bound for
/// the error of any linear spline of a quadratic with constant weight.
pub fn certified_lower_bound(mesh: &Triangulation, form_det: f64, weight: f64, p: f64) -> Result<f64> {
    let c = c_p_arccos(p)? * weight * form_det.sqrt();
    let sum: f64 = mesh.iter_triangles().map(|t| (c * t.area().powf(1.0 + 1.0 / p)).powf(p)).sum();
    Ok(sum.powf(1.0 / p))
}

struct RowOutcome {
    row: ConvergenceRow,
    details: RowDetails,
    baseline: BaselineRow,
}

fn study_row(
    field: &ScalarField,
    weight: &WeightField,
    p: f64,
    n: usize,
    epsilon: f64,
    limit: f64,
    spec: &QuadratureSpec,
) -> Result<RowOutcome> {
    let (mesh, plan) = build_mesh(field, weight, p, n, epsilon)?;
    let report = validate_triangulation(&mesh);
    let err: ErrorValue = global_error_unchecked(field, &mesh, p, weight, spec)?;
    let n_actual = mesh.len();
    let nte = n_actual as f64 * err.value;
    let lower = match weight {
        WeightField::Constant(w) if field.has_constant_hessian() => {
            let q = field.local_form(plan.cells[0].cell().center())?;
            Some(certified_lower_bound(&mesh, q.det().abs(), *w, p)?)
        }
        _ => None,
    };
    let uni = uniform_mesh(n)?;
    let uerr = global_error_unchecked(field, &uni, p, weight, spec)?;
    let unte = uni.len() as f64 * uerr.value;
    Ok(RowOutcome {
        row: ConvergenceRow {
            n_requested: n,
            n_actual,
            epsilon,
            error: err.value,
            n_times_error: nte,
            limit,
            ratio: nte / limit,
        },
        details: RowDetails {
            n_requested: n,
            m: plan.m,
            n1_bar: plan.n1_bar,
            converged: err.converged && uerr.converged,
            conformity_violations: report.conformity_violations(),
            hanging_vertices: report.hanging_vertices.len(),
            certified_lower_bound: lower,
        },
        baseline: BaselineRow {
            n_requested: n,
            n_actual: uni.len(),
            error: uerr.value,
            n_times_error: unte,
            ratio: unte / limit,
        },
    })
}

/// For each N: build the adaptive mesh, measure the error, compare against
/// the limit and against the uniform mesh. Rows run in parallel; a failing
/// row is recorded and the others continue.
pub fn convergence_study(
    field: &ScalarField,
    weight: &WeightField,
    p: f64,
    n_list: &[usize],
    epsilon: f64,
    spec: &QuadratureSpec,
) -> Result<ConvergenceReport> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::invalid(format!("exponent p must be positive, got {p}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("N list must be strictly increasing"));
    }
    spec.validate()?;
    field.bounds()?;
    weight.check_positive()?;
    let mut report = ConvergenceReport::empty(field, weight, p, epsilon, *spec)?;
    if n_list.is_empty() {
        return Ok(report);
    }
    let limit = theoretical_limit(field, weight, p, spec)?;
    let outcomes: Vec<Result<RowOutcome>> =
        n_list.par_iter().map(|&n| study_row(field, weight, p, n, epsilon, limit, spec)).collect();
    for (&n, out) in n_list.iter().zip(outcomes) {
        match out {
            Ok(o) => {
                report.rows.push(o.row);
                report.details.push(o.details);
                report.baseline.push(o.baseline);
            }
            Err(e) => report.failures.push(RowFailure { n_requested: n, message: e.to_string() }),
        }
    }
    report.metadata.hash = report.compute_hash()?;
    Ok(report)
}

/// [`convergence_study`] with the default N list, ε and quadrature.
pub fn default_study(field: &ScalarField, weight: &WeightField, p: f64) -> Result<ConvergenceReport> {
    convergence_study(field, weight, p, &DEFAULT_N_LIST, DEFAULT_EPSILON, &QuadratureSpec::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCheck {
    pub kind: String,
    pub grid: usize,
    /// Largest increase between consecutive samples (≤ 0 when non-increasing).
    pub max_increase: f64,
    pub argmin: f64,
    pub min_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    pub p: f64,
    pub l_profile: ProfileCheck,
    pub s_profile: ProfileCheck,
    pub s_tilde_profile: ProfileCheck,
    pub q_quarter_pi: f64,
    pub proposition_one: SignScanResult,
    pub proposition_two: SignScanResult,
}

impl AppendixReport {
    /// L and S̃ non-increasing, S minimal within one step of π/3,
    /// q(π/4) ≤ 0, z₁ ≤ 1e-12, and z₂ with one sign change inside (0, 1).
    pub fn all_hold(&self) -> bool {
        let step = FRAC_PI_4 / self.s_profile.grid as f64;
        self.l_profile.max_increase <= 0.0
            && self.s_tilde_profile.max_increase <= 0.0
            && (self.s_profile.argmin - std::f64::consts::FRAC_PI_3).abs() <= step
            && self.q_quarter_pi <= 0.0
            && self.proposition_one.max_value <= 1e-12
            && self.proposition_two.sign_changes.len() == 1
            && self.proposition_two.sign_changes[0][0] > 0.0
            && self.proposition_two.sign_changes[0][1] < 1.0
    }
}

pub const PROFILE_GRID: usize = 200;
pub const SIGN_SCAN_GRID: usize = 10_000;

fn profile_check(kind: ProfileKind, points: &[f64], p: f64) -> Result<ProfileCheck> {
    let vals: Vec<f64> = points.iter().map(|&a| appendix_profile(kind, a, p)).collect::<Result<_>>()?;
    let max_increase = vals.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let (imin, &min_value) =
        vals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("profile grid is not empty");
    Ok(ProfileCheck { kind: format!("{kind:?}"), grid: points.len(), max_increase, argmin: points[imin], min_value })
}

/// Samples the three isosceles/right profiles on 200-point grids and scans
/// both propositions on 10⁴-point grids.
pub fn appendix_check(p: f64) -> Result<AppendixReport> {
    let n = PROFILE_GRID;
    let h = FRAC_PI_4 / n as f64;
    let low: Vec<f64> = (1..=n).map(|k| (k as f64 * h).min(FRAC_PI_4)).collect();
    let high: Vec<f64> = (0..n).map(|k| FRAC_PI_4 + k as f64 * h).filter(|&a| a < FRAC_PI_2).collect();
    Ok(AppendixReport {
        p,
        l_profile: profile_check(ProfileKind::L, &low, p)?,
        s_profile: profile_check(ProfileKind::S, &high, p)?,
        s_tilde_profile: profile_check(ProfileKind::STilde, &low, p)?,
        q_quarter_pi: q_at_quarter_pi(p)?,
        proposition_one: z_sign_scan(Proposition::One, p, SIGN_SCAN_GRID)?,
        proposition_two: z_sign_scan(Proposition::Two, p, SIGN_SCAN_GRID)?,
    })
}
