use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use optri::constants::{c_p_plus, optimize_shape_with, ShapeScanOptions};
use optri::experiments::{appendix_check, convergence_study, report_write, ReportFormat, DEFAULT_N_LIST};
use optri::meshgen::{build_mesh, DEFAULT_EPSILON};
use optri::norms::global_error;
use optri::quadform::optimal_triangle;
use optri::{Error, QuadraticForm, QuadratureSpec, ScalarField, Triangulation, WeightField};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "optri", version, about = "Optimal linear-spline interpolation on triangulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// The constant C_p^+ by both closed forms and by quadrature.
    Constant {
        #[arg(long)]
        p: f64,
        /// Print the full record as JSON instead of the value alone.
        #[arg(long)]
        json: bool,
    },
    /// Brute-force scan of unit-area triangle shapes; writes the sample table as CSV.
    ShapeScan {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimal triangle of a given area for A x^2 + B y^2 + 2C xy.
    OptimalTriangle {
        #[arg(long = "A", allow_hyphen_values = true)]
        a: f64,
        #[arg(long = "B", allow_hyphen_values = true)]
        b: f64,
        #[arg(long = "C", allow_hyphen_values = true)]
        c: f64,
        #[arg(long)]
        area: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        orientation: f64,
    },
    /// Build the adaptive mesh; `.off` output paths get OFF, anything else JSON.
    Mesh {
        #[arg(long)]
        field: String,
        #[arg(long, default_value = "expr:1")]
        weight: String,
        #[arg(long)]
        p: f64,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the mesh plan (default: next to the mesh).
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Weighted L_p interpolation error of a field on a mesh (JSON mesh file).
    Error {
        #[arg(long)]
        field: String,
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value = "expr:1")]
        weight: String,
    },
    /// Convergence study; `.json` output paths get JSON, anything else CSV.
    Converge {
        #[arg(long)]
        field: String,
        #[arg(long, default_value = "expr:1")]
        weight: String,
        #[arg(long)]
        p: f64,
        #[arg(long = "Ns", value_delimiter = ',')]
        ns: Option<Vec<usize>>,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Profile monotonicity and proposition sign scans.
    AppendixCheck {
        #[arg(long)]
        p: f64,
    },
}

enum Failure {
    Core(Error),
    Tolerance(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotAdmissible(_) | Error::NotPositiveDefinite { .. } => 4,
        Error::ToleranceNotReached { .. }
        | Error::EvalError(_)
        | Error::ModulusTooRough { .. }
        | Error::GlueError(_)
        | Error::CoverageError(_) => 3,
        _ => 2,
    }
}

fn print_json(v: &impl Serialize) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(v).map_err(Error::from)?);
    Ok(())
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn has_ext(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Constant { p, json } => {
            let c = c_p_plus(p)?;
            if json {
                print_json(&c)?;
            } else {
                println!("{}", c.value);
            }
        }
        Command::ShapeScan { p, grid, out } => {
            let r = optimize_shape_with(p, grid, ShapeScanOptions { keep_table: true, ..Default::default() })?;
            write(&out, r.table_csv().as_bytes())?;
            let summary = optri::ShapeScanResult { table: None, ..r };
            print_json(&summary)?;
        }
        Command::OptimalTriangle { a, b, c, area, orientation } => {
            let t = optimal_triangle(&QuadraticForm::new(a, b, c), area, orientation)?;
            print_json(&serde_json::json!({
                "vertices": [[t.a.x, t.a.y], [t.b.x, t.b.y], [t.c.x, t.c.y]],
                "area": t.area(),
            }))?;
        }
        Command::Mesh { field, weight, p, n, epsilon, out, plan } => {
            let f = ScalarField::from_spec(&field)?;
            let w = WeightField::from_spec(&weight)?;
            let (mesh, mesh_plan) = build_mesh(&f, &w, p, n, epsilon)?;
            let body = if has_ext(&out, "off") { mesh.to_off() } else { mesh.to_json()? };
            write(&out, body.as_bytes())?;
            let plan_path = plan.unwrap_or_else(|| out.with_extension("plan.json"));
            write(&plan_path, mesh_plan.to_json()?.as_bytes())?;
            eprintln!("{} triangles (m = {}) -> {}", mesh.len(), mesh_plan.m, out.display());
        }
        Command::Error { field, mesh, p, weight } => {
            let f = ScalarField::from_spec(&field)?;
            let w = WeightField::from_spec(&weight)?;
            let src = fs::read_to_string(&mesh).map_err(|e| Error::Io(format!("{}: {e}", mesh.display())))?;
            let m = Triangulation::from_json(&src)?;
            let e = global_error(&f, &m, p, &w, &QuadratureSpec::default())?;
            print_json(&e)?;
            if !e.converged {
                return Err(Failure::Tolerance(format!("quadrature tolerance not reached; value {} is a best estimate", e.value)));
            }
        }
        Command::Converge { field, weight, p, ns, epsilon, out } => {
            let f = ScalarField::from_spec(&field)?;
            let w = WeightField::from_spec(&weight)?;
            let ns = ns.unwrap_or_else(|| DEFAULT_N_LIST.to_vec());
            let r = convergence_study(&f, &w, p, &ns, epsilon, &QuadratureSpec::default())?;
            let fmt = if has_ext(&out, "json") { ReportFormat::Json } else { ReportFormat::Csv };
            write(&out, &report_write(&r, fmt)?)?;
            for fail in &r.failures {
                eprintln!("N={}: {}", fail.n_requested, fail.message);
            }
            for row in &r.rows {
                eprintln!("N={:>6} N_actual={:>6} ratio={:.5}", row.n_requested, row.n_actual, row.ratio);
            }
        }
        Command::AppendixCheck { p } => {
            let r = appendix_check(p)?;
            print_json(&r)?;
            if !r.all_hold() {
                return Err(Failure::Tolerance(format!("appendix checks do not all hold at p = {p}")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Tolerance(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
