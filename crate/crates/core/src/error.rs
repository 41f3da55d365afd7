//! Error type shared by all solvers.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveguideError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("tube self-intersection at eps = {eps}: density {rho} <= 0 at x = {x}")]
    SelfIntersection { eps: f64, x: f64, rho: f64 },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: String,
    },

    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        method: String,
        iterations: usize,
        residual: f64,
    },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("problem too large: {unknowns} unknowns exceeds cap {cap}")]
    TooLarge { unknowns: usize, cap: usize },

    #[error("profile too rough: |eps f'| = {value} >= 1 at x = {x}")]
    ProfileTooRough { x: f64, value: f64 },

    #[error("sweep rejected: {0}")]
    SweepRejected(String),

    #[error("io: {0}")]
    Io(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl From<std::io::Error> for WaveguideError {
    fn from(e: std::io::Error) -> Self {
        WaveguideError::Io(e.to_string())
    }
}

impl From<csv::Error> for WaveguideError {
    fn from(e: csv::Error) -> Self {
        WaveguideError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, WaveguideError>;
