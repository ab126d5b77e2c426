use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty state: trace is zero")]
    EmptyState,

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("eigenvalues {lambda1} and {lambda2} are too close to separate (non-diagonalizable within tolerance)")]
    NearDegenerate {
        lambda1: num_complex::Complex64,
        lambda2: num_complex::Complex64,
    },

    #[error("points {0} and {1} coincide within tolerance; use the brute-force nested sum")]
    ConfluentPoints(usize, usize),

    #[error("singular factor in resummed expression: {0}")]
    SingularResummation(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative evolution time {0}")]
    NegativeTime(f64),

    #[error("no purification possible: coupling g is zero")]
    NoPurification,

    #[error("{what} = {value} exceeds the limit {limit}{hint}")]
    LimitExceeded {
        what: &'static str,
        value: usize,
        limit: usize,
        hint: &'static str,
    },

    #[error("regime precondition violated: {0}")]
    Regime(String),
}

pub type Result<T> = std::result::Result<T, Error>;
