//! Error type shared by all engines.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quadrature, series or iteration failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Root-finding for a model parameter failed or the target is unattainable.
    #[error("calibration failed: {0}")]
    Calibration(String),

    /// Mesh generation could not reach the required element quality.
    #[error("mesh quality: {0}")]
    MeshQuality(String),

    /// The generalized eigensolver did not converge.
    #[error("eigensolver: {0}")]
    Solver(String),

    /// Eigenbasis cache entry is corrupt or incompatible.
    #[error("cache: {0}")]
    Cache(String),

    /// Malformed market input or scenario data.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
