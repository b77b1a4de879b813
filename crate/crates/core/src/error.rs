use alloc::string::String;

/// Errors raised by the core toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index ({row}, {col}) out of range for dimension {n}")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("matrix is not Hermitian at ({row}, {col})")]
    NotHermitian { row: usize, col: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate profile: every probability is zero")]
    DegenerateProfile,
    #[error("size guard exceeded: {what} ({size} > {limit})")]
    SizeGuard { what: &'static str, size: u128, limit: u128 },
    #[error("full mode is validation-only (n = {n} > {limit})")]
    FullModeTooLarge { n: usize, limit: usize },
    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("lambda violates the guard at ({row}, {col}): |lambda^2 - H_ij H_ji| = {value:e}")]
    GuardViolation { row: usize, col: usize, value: f64 },
    #[error("vector is not in the null space of M(lambda) - H(lambda): relative residual {residual:e}")]
    NotNullVector { residual: f64 },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("walk is invalid: {0}")]
    InvalidWalk(String),
    #[error("walk is not normal in its walk graph")]
    NotNormal,
    #[error("graph is disconnected")]
    Disconnected,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = core::result::Result<T, Error>;
