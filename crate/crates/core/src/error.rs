//! Error types shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation was called with parameters outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Vector or matrix dimensions do not match.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A grid state or operation does not fit inside the configured grid.
    #[error("grid configuration error: {0}")]
    Configuration(String),

    /// Wavepacket mass near the periodic boundary exceeds the allowed budget.
    #[error("boundary contamination: mass {mass:.3e} within {cells} cells of the grid edge")]
    BoundaryContamination { mass: f64, cells: usize },

    /// A quadrature or sampling step failed to reach its target accuracy.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The least-squares normal matrix is numerically singular.
    #[error(
        "singular design: min eigenvalue {min_eig:.3e} vs max {max_eig:.3e} over {n_used} pairs"
    )]
    SingularDesign {
        min_eig: f64,
        max_eig: f64,
        n_used: usize,
    },

    /// The requested operation is not supported by this backend.
    #[error("unsupported backend: {0}")]
    UnsupportedBackend(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
