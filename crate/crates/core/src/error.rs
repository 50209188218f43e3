use thiserror::Error;

/// Errors raised by the numerical layers of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix is singular (condition number {condition:.3e}); divisibility is undecidable")]
    Singular { condition: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("matrix is not self-adjoint (residual {residual:.3e})")]
    NotSelfAdjoint { residual: f64 },

    #[error("invalid probability data: {0}")]
    InvalidProbability(String),

    #[error("index {index} out of range for dimension {dim}")]
    OutOfRange { index: usize, dim: usize },

    #[error("time {t} is outside the family's domain [{start}, {end}]")]
    OutsideDomain { t: f64, start: f64, end: f64 },

    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
