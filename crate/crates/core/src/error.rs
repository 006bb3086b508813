use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),
    #[error("element is not invertible")]
    SingularElement,
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("not a shearing subgroup: {0}")]
    NotShearing(String),
    #[error("matrix is not in the group: {0}")]
    NotInGroup(String),
    #[error("point is not in the open orbit: {0:?}")]
    NotInOrbit(Vec<f64>),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("numerical procedure did not converge: {0}")]
    NonConvergence(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
