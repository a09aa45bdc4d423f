use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("incompatible grids: {0}")]
    IncompatibleGrid(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shift of {tau} s is not an integer multiple of dt = {dt} s")]
    Quantization { tau: f64, dt: f64 },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("not factorizable: {0}")]
    NotFactorizable(String),

    #[error("cannot extract delay: {0}")]
    ZeroAtOrigin(String),

    #[error("ill-conditioned identification: {0}")]
    IllConditioned(String),

    #[error("not a minimum-phase-preserving operator: {0}")]
    NotPreserving(String),

    #[error("not a self-map of the disk: {0}")]
    NotSelfMap(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
