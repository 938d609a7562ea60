use thiserror::Error;

/// Errors raised while building states, targets or evaluating integrals.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Gamma = V + I/2 is not positive definite")]
    NotPositiveDefinite,

    #[error("state is not pure: det(2V) = {det:.12}, symplectic spectrum deviation {spread:.3e}")]
    Impure { det: f64, spread: f64 },

    #[error("kernel is singular")]
    Singular,

    #[error("real part of the kernel is not positive definite")]
    NotAccretive,

    #[error("amplitude too small for odd-cat normalisation: |gamma| = {0:.3e}")]
    AmplitudeTooSmall(f64),

    #[error("graph error: {0}")]
    Graph(String),

    #[error("target has {target} modes but state has {state}")]
    ModeMismatch { state: usize, target: usize },

    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error("truncation too coarse: norm deficit {deficit:.3e} at cutoff {cutoff}")]
    Truncation { cutoff: usize, deficit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
