use std::path::PathBuf;

use thiserror::Error;

use crate::specfn::SpecialFnError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel specification: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Cholesky failed at every rung of the jitter ladder.
    #[error("covariance is not numerically positive definite (last jitter tried: {jitter:e})")]
    IllConditioned { jitter: f64 },

    /// Two inputs coincide and carry no noise, so the Gram matrix is exactly singular.
    #[error("inputs {first} and {second} coincide with zero noise; the Gram matrix is singular")]
    DuplicateInputs { first: usize, second: usize },

    #[error("predictive variance {value:e} at index {index} is negative beyond round-off")]
    NegativeVariance { index: usize, value: f64 },

    #[error("predictive covariance is singular (smallest eigenvalue {min_eigenvalue:e})")]
    SingularCovariance { min_eigenvalue: f64 },

    #[error("hyperparameter training failed: {0}")]
    TrainingFailure(String),

    #[error("point ({a}, {b}) lies outside the posterior grid")]
    OutsideGrid { a: f64, b: f64 },

    #[error("Beta MLE ({a}, {b}) lies outside the posterior grid; widen the grid bounds")]
    WidenGrid { a: f64, b: f64 },

    #[error("plotting is only supported for 1-D inputs (got dimension {0})")]
    UnsupportedPlot(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    SpecialFn(#[from] SpecialFnError),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{failed} of {total} replicates failed")]
    ReplicateFailures { failed: usize, total: usize },
}

impl Error {
    /// True for errors meaning the model covariance cannot be factorized.
    pub fn is_ill_conditioned(&self) -> bool {
        matches!(self, Error::IllConditioned { .. } | Error::DuplicateInputs { .. })
    }

    /// Process exit status for the command-line runner: 1 for usage and
    /// configuration problems, 2 for numerical failures, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } => 1,
            Error::Io { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
