use std::path::PathBuf;

use thiserror::Error;

use crate::fock::Mode;

pub type Result<T, E = QbellError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QbellError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The "-" quasi-Bell states are undefined at zero amplitude.
    #[error("state {label} is undefined at beta = 0 (normalizer diverges)")]
    DegenerateState { label: &'static str },

    #[error(
        "truncation too small on {mode}: trace deficit {deficit:e} exceeds tolerance {tolerance:e}"
    )]
    TruncationTooSmall {
        mode: Mode,
        deficit: f64,
        tolerance: f64,
    },

    #[error("matrix is not Hermitian: max |M - M^dagger| = {asymmetry:e}")]
    NonHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite: minimum eigenvalue {min_eigenvalue:e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "trace mismatch between states: |Tr(rho0) - Tr(rho1)| = {difference:e} (inconsistent truncation)"
    )]
    TraceMismatch { difference: f64 },

    #[error(
        "states are not related by the mode-2 pi rotation (deviation {deviation:e}); \
         uniform priors are not provably minimax, use an explicit prior search instead"
    )]
    SymmetryViolation { deviation: f64 },

    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
