use thiserror::Error;

/// Errors raised by the lattice, metric and energy routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("shrink distance must be nonnegative, got {0}")]
    NegativeShrink(f64),

    #[error("lattice scale must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("basis matrix is singular")]
    SingularBasis,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("curvature is only defined for two-dimensional metrics, got n = {0}")]
    CurvatureDimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero interaction vector")]
    ZeroVector,

    #[error("coordinate {index} of {vector:?} is zero and cannot seed a basis")]
    ZeroPivot { vector: Vec<i64>, index: usize },

    #[error("missing nodal value at lattice node {0:?}")]
    MissingNode(Vec<i64>),

    #[error("quadrature over an empty domain")]
    EmptyQuadrature,

    #[error("non-finite energy encountered: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
