use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("count at row {row} is not an integer: {value}")]
    NonIntegerCount { row: usize, value: f64 },

    #[error("count out of range at row {row}: y={y}, m={m} (need 0 <= y <= m, m >= 1)")]
    CountOutOfRange { row: usize, y: f64, m: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty dataset")]
    EmptyData,

    #[error("non-finite input: {0}")]
    NonFiniteInput(&'static str),

    #[error("non-finite result in {0}")]
    NonFiniteResult(&'static str),

    #[error("Cholesky factorization failed at pivot {pivot}")]
    CholeskyFailure { pivot: usize },

    #[error("no gradient: information matrix is numerically singular")]
    NoGradient,

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("instance too large for the subset-expansion oracle: n={n} (limit {limit})")]
    TooLargeForOracle { n: usize, limit: usize },

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("linear program numerical failure: {0}")]
    LpNumericalFailure(&'static str),

    #[error("row {0} has zero norm; the row-norm decay bound is undefined")]
    ZeroRowNorm(usize),

    #[error("parse error: {0}")]
    ParseError(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
