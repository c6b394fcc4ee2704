//! Error type shared across the toolkit.

use thiserror::Error;

/// Errors produced by grid construction, path generation, integration and
/// the solvers.
#[derive(Debug, Error)]
pub enum SieError {
    /// Interval endpoints are not finite or not ordered a < b.
    #[error("invalid interval: require finite a < b, got a={a}, b={b}")]
    InvalidInterval { a: f64, b: f64 },

    /// A grid with zero steps was requested.
    #[error("invalid step count: m must be >= 1")]
    InvalidSteps,

    /// Refinement factor below 2.
    #[error("invalid refinement factor {factor}: must be >= 2")]
    InvalidFactor { factor: usize },

    /// An ensemble or process with zero paths.
    #[error("empty ensemble: n_paths must be >= 1")]
    EmptyEnsemble,

    /// Two objects that must share a grid and path count do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A NaN or infinity was produced; carries the first offending cell.
    #[error("numeric failure: non-finite value at path {path}, index {index}")]
    NumericFailure { path: usize, index: usize },

    /// A parameter outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An analytic bound was requested but the registry has no closed form.
    #[error("analytic bound unavailable: {0}")]
    BoundUnavailable(String),

    /// Quadrature nodes of a grid function do not match the expected rule.
    #[error("node mismatch: {0}")]
    NodeMismatch(String),

    /// All probe trials were degenerate (X = Y).
    #[error("degenerate probe: every trial pair coincided")]
    DegenerateProbe,

    /// Malformed descriptor string (coefficient, kernel or initial law).
    #[error("parse error: {0}")]
    Parse(String),

    /// Malformed or truncated ensemble dump.
    #[error("dump format error: {0}")]
    DumpFormat(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SieError>;
