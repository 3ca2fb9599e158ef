//! Coupled-cluster equations on small fermionic systems: bitstring determinant
//! algebra, a dense Full-CI oracle, cluster-amplitude machinery, the CC residual
//! map with its analytic Jacobian, topological-index analysis of CC zeros, and
//! linear / Kowalski–Piecuch homotopy continuation.
//!
//! Everything is dense and desk-scale (K ≤ 24 spin-orbitals, sector dimensions
//! in the tens): the point is numerical verification of structural identities,
//! not performance.

pub mod scalar;
pub mod linalg;
pub mod fockspace;
pub mod models;
pub mod cluster;
pub mod cccore;
pub mod analysis;
pub mod homotopy;
pub mod jsonio;

pub use scalar::Scalar;

/// Complex double, the non-real scalar field used throughout.
pub type C64 = num_complex::Complex64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("numerical: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
