//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    /// A vector or matrix did not have the expected dimension.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    InvalidDimension { expected: usize, actual: usize },

    /// An edge referenced a variable id that is not in the graph.
    #[error("unknown variable id {0}")]
    UnknownVariable(usize),

    /// An information matrix failed the symmetry check.
    #[error("information matrix is not symmetric (max asymmetry {0:.3e})")]
    InvalidInformation(f64),

    /// An error function produced NaN or infinity.
    #[error("edge {0}: error function produced a non-finite value")]
    NonFiniteError(usize),

    /// A Jacobian block contains NaN or infinity.
    #[error("edge {0}: jacobian contains non-finite entries")]
    NonFiniteJacobian(usize),

    /// The assembled linear system is numerically singular. For KKT systems
    /// this usually signals linearly dependent constraint Jacobians.
    #[error("linear system is numerically singular")]
    SingularSystem,

    /// Soft-constraint weight must be strictly positive.
    #[error("soft constraint weight must be positive, got {0}")]
    InvalidWeight(f64),

    /// Optimal control horizons need at least two reference samples.
    #[error("horizon must be at least 2, got {0}")]
    InvalidHorizon(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
