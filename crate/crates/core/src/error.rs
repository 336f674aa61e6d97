use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid committee: {0}")]
    InvalidCommittee(String),

    #[error("{what} index {index} out of range (< {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("{what} requires {required}, limit is {limit}")]
    CapacityExceeded {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    #[error("linear program is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("simplex iteration limit {0} exceeded")]
    IterationLimit(usize),

    #[error("opening vector sums to {sum}, expected an integer (k = {expected})")]
    NonIntegralSum { sum: String, expected: String },

    #[error("dependent rounding step needs two fractional values, got {0} and {1}")]
    NotFractional(String, String),

    #[error("weights are not exact rationals; give them as \"p/q\" strings")]
    NonRationalWeights,

    #[error("index sets overlap at {0}")]
    OverlappingSets(usize),

    #[error("function is not monotone non-decreasing")]
    NotMonotone,

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Capacity, size and iteration limits, as opposed to malformed input.
    pub fn is_limit(&self) -> bool {
        matches!(
            self,
            Error::CapacityExceeded { .. } | Error::IterationLimit(_)
        )
    }
}
