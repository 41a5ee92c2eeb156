use alloc::string::String;

use crate::linalg::C64;

/// Errors raised by the damping-optimization core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("{what} is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { what: &'static str, asymmetry: f64 },
    #[error("{what} is not positive definite")]
    NotPositiveDefinite { what: &'static str },
    #[error("{what} has a negative eigenvalue ({min_eig:e})")]
    NotPositiveSemidefinite { what: &'static str, min_eig: f64 },
    #[error("negative gain {value} at index {index}")]
    NegativeGain { index: usize, value: f64 },
    #[error("shift s = {s} is too close to a pole (reciprocal condition {rcond:e})")]
    PoleProximity { s: C64, rcond: f64 },
    #[error("reduced model has eigenvalues on the imaginary axis; the L-infinity norm is unbounded")]
    Unbounded,
    #[error("eigenvalue iteration did not converge after {iterations} sweeps")]
    EigenNoConvergence { iterations: usize },
    #[error("nonsmooth point: singular gap {singular_gap:e}, peak gap {peak_gap:e}")]
    NonsmoothPoint { singular_gap: f64, peak_gap: f64 },
    #[error("matrix is singular")]
    Singular,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("system dimension {n} exceeds the dense limit {limit}")]
    SizeGuard { n: usize, limit: usize },
    #[error("optimization failed: {0}")]
    Optimization(String),
}

pub type Result<T> = core::result::Result<T, Error>;
