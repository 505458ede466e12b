use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature order {requested} exceeds supported maximum {max}")]
    UnsupportedQuadratureOrder { requested: usize, max: usize },

    #[error("polynomial degree {degree} is too low for {what} (needs at least {min})")]
    DegreeTooLow { what: &'static str, degree: usize, min: usize },

    #[error("polynomial degree {0} is not supported (1..=4)")]
    UnsupportedDegree(usize),

    #[error("invalid method configuration: {0}")]
    InvalidMethod(String),

    #[error("singular local moment matrix on element {element}")]
    SingularLocalMatrix { element: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is singular or numerically unstable: {0}")]
    SingularMatrix(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("dense diagnostic size limit exceeded: n = {n} > {limit}")]
    SizeLimit { n: usize, limit: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
