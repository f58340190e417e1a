use thiserror::Error;

/// Errors produced by the fusion pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("spectrum violates Hermitian symmetry: relative deviation {deviation:.3e} exceeds {tolerance:.1e}")]
    SymmetryViolation { deviation: f64, tolerance: f64 },

    #[error("optimization diverged at step {step}: composite loss is not finite")]
    Divergence { step: usize },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("schema error in {path}: {message}")]
    Schema { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
