use thiserror::Error;

/// Errors raised by the contcat library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least {min} components, got {got}")]
    TooFewComponents { min: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what}[{index}] is not finite ({value})")]
    NonFinite {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("{what}[{index}] = {value} must be strictly positive")]
    NonPositive {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("component {index} is negative ({value})")]
    NegativeComponent { index: usize, value: f64 },

    #[error("components sum to {sum}, not 1")]
    NotNormalized { sum: f64 },

    #[error("{name} = {value} is out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("mode is not unique: components {indices:?} tie for the maximum")]
    ModeTie { indices: Vec<usize> },

    #[error("{sampler} sampler exceeded its budget of {budget} proposals for one draw ({params})")]
    BudgetExceeded {
        sampler: &'static str,
        budget: u64,
        params: String,
    },

    #[error(
        "average lies on the simplex boundary (zero components {components:?}); \
         the likelihood has no finite maximizer"
    )]
    BoundaryAverage { components: Vec<usize> },

    #[error("objective is not finite at row {row}")]
    NonFiniteLoss { row: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
