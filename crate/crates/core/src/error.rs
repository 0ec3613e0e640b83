use thiserror::Error;

/// Errors raised by the distribution, rule and inference layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular (smallest singular value {sigma_min:e})")]
    Singular { sigma_min: f64 },

    #[error("matrix is ill-conditioned: condition estimate {estimate:e} exceeds cap {cap:e}")]
    IllConditioned { estimate: f64, cap: f64 },

    #[error("marginal entry {index} is {value:e}, at or below the support threshold")]
    ZeroMarginal { index: usize, value: f64 },

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("composite rules need an odd number of terms, got {0}")]
    EvenLength(usize),

    #[error("empty sample: counts sum to zero")]
    EmptySample,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid rule spec `{spec}`: {reason}")]
    RuleSpec { spec: String, reason: String },

    #[error("sequence space: {0}")]
    Sequence(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures caused by numerically degenerate input (singular,
    /// ill-conditioned, or zero-mass marginals).
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. } | Error::IllConditioned { .. } | Error::ZeroMarginal { .. }
        )
    }
}
