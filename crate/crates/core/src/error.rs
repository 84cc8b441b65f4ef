use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate triangle (area {area:e})")]
    DegenerateTriangle { area: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tiles do not cover the cell: {0}")]
    CoverageError(String),

    /// Adaptive quadrature stopped at its depth cap. `estimate` is the best
    /// value available and is usually still good to several digits.
    #[error("quadrature tolerance not reached (best estimate {estimate:e})")]
    ToleranceNotReached { estimate: f64 },

    #[error("invalid triangulation: {0}")]
    InvalidTriangulation(String),

    #[error("quadratic form is not positive definite (A={a}, B={b}, C={c})")]
    NotPositiveDefinite { a: f64, b: f64, c: f64 },

    #[error("unknown field `{0}`")]
    UnknownField(String),

    #[error("field is not admissible: {0}")]
    NotAdmissible(String),

    #[error("parse error at offset {offset}: {message}")]
    ParseError { offset: usize, message: String },

    #[error("evaluation error: {0}")]
    EvalError(String),

    #[error("modulus of continuity too rough: no m <= {cap} satisfies the freeze condition")]
    ModulusTooRough { cap: usize },

    #[error("gluing failed: {0}")]
    GlueError(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
