use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not pure: det(sigma) = {det}")]
    NotPure { det: f64 },

    #[error("matrix is not symplectic: residual {residual:e} exceeds {tolerance:e}")]
    NotSymplectic { residual: f64, tolerance: f64 },

    #[error(
        "quadrature did not converge: error estimate {achieved:e} > {requested:e} after {intervals} intervals"
    )]
    QuadratureNotConverged {
        achieved: f64,
        requested: f64,
        intervals: usize,
    },

    #[error("perturbative fit rejected for {entry}: residual {residual:e} vs leading coefficient {leading:e}")]
    FitResidual {
        entry: String,
        residual: f64,
        leading: f64,
    },

    #[error("mode sum truncation tail {tail:e} exceeds tolerance {tolerance:e}; widen n_max")]
    TruncationTail { tail: f64, tolerance: f64 },

    #[error("degenerate channel: {0}")]
    Degenerate(String),

    #[error("decoder calibration failed for s = {squeezing}: |F - F0| = {deviation:e}")]
    Calibration { squeezing: f64, deviation: f64 },

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("cached transition table {path} is corrupted: {reason}")]
    CorruptCache {
        path: std::path::PathBuf,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
