use thiserror::Error;

/// Errors reported by builders, solvers and probes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("wavenumber {0} lies in pi*Z (|sin k| <= 1e-12)")]
    WavenumberInPiZ(f64),
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("capacity exceeded: {what} needs dimension {dim}, limit is {limit}")]
    Capacity {
        what: &'static str,
        dim: usize,
        limit: usize,
    },
    #[error("k = {k} is not commensurate with circumference {circumference}; nearest commensurate value is {suggestion}")]
    Incommensurate {
        k: f64,
        circumference: usize,
        suggestion: f64,
    },
    #[error("derivative of order {requested} unavailable (maximum {max})")]
    DerivativeOrder { requested: usize, max: usize },
    #[error("quadrature mesh rejected: node at |y| = {min_y} is too close to the spectrum")]
    MeshRejected { min_y: f64 },
    #[error("y = {y} is below the floor {floor}")]
    BelowFloor { y: f64, floor: f64 },
    #[error("factorization failed at shift {shift_re} + {shift_im}i: {reason}")]
    Solver {
        shift_re: f64,
        shift_im: f64,
        reason: String,
    },
    #[error("misuse: {0}")]
    Misuse(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
