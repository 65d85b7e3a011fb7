use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: {context} (expected {expected}, found {found})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("weights are all zero")]
    AllZeroWeights,

    #[error("singular linear system: the Gram matrix X'X is not invertible; use a ridge penalty lambda > 0")]
    SingularSystem,

    #[error(
        "propensity fit did not converge after {iterations} iterations; \
         the classes are likely perfectly separable -- add regularization or remove degenerate features"
    )]
    PerfectSeparation { iterations: usize },

    #[error("propensity fit requires both source and target rows")]
    SingleClass,

    #[error("objective became non-finite at epoch {epoch}; check the inputs for extreme values")]
    NonFiniteObjective { epoch: usize },

    #[error("estimator failed at replication {rep}: {message}")]
    EstimatorFailure { rep: usize, message: String },

    #[error("pairing requires at least two units, got {0}")]
    TooFewUnits(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
