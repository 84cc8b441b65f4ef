//! Optimal linear-spline interpolation on triangulations: the sharp constant
//! C_p⁺, optimal triangles for quadratic forms, asymptotically optimal
//! meshes of the unit square and weighted L_p error measurement.

pub mod constants;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod geometry;
pub mod meshgen;
pub mod norms;
pub mod quadform;
pub mod quadrature;

pub use constants::{c_p_plus, CpValue, ShapeScanResult};
pub use error::{Error, Result};
pub use experiments::{convergence_study, report_write, ConvergenceReport, ReportFormat};
pub use fields::{ScalarField, WeightField};
pub use geometry::{validate_triangulation, Point2, Square, Triangle, Triangulation, ValidityReport};
pub use meshgen::{build_mesh, uniform_mesh, MeshPlan};
pub use norms::{global_error, ErrorValue, LinearFunction, PlaneFn};
pub use quadform::{optimal_triangle, AffineMap, QuadraticForm};
pub use quadrature::QuadratureSpec;
