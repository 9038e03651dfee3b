//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mesh validation failed: {0}")]
    InvalidMesh(String),
    #[error("non-manifold edge ({0}, {1}) shared by {2} triangles")]
    NonManifold(usize, usize, usize),
    #[error("triangle orientations cannot be made consistent")]
    NonOrientable,
    #[error("OFF parse error: {0}")]
    OffParse(String),
    #[error("operation unsupported: {0}")]
    Unsupported(String),
    #[error("mismatched cochains: {0}")]
    Mismatch(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("spectral gap too small: {0}")]
    SpectralGap(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
