use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("monomial count {count} exceeds the cap of {cap}")]
    CombinatorialBlowup { count: u128, cap: usize },
    #[error("invalid query `{0}`")]
    InvalidQuery(String),
    #[error("sampling exhausted after {retries} consecutive failed draws (last error: {last})")]
    SamplingExhausted { retries: usize, last: String },
    #[error("too few rows: have {have}, need {need}")]
    TooFewRows { have: usize, need: usize },
    #[error("no truncated series registered for `{0}`")]
    UnknownSeries(String),
    #[error("design matrix has rank 0")]
    SingularDesign,
    #[error("no sparse model: full-model mse {mse:e} exceeds epsilon {epsilon:e}")]
    NoSparseModel { mse: f64, epsilon: f64 },
    #[error("search space too large: {0}")]
    SearchSpaceTooLarge(String),
    #[error("identity is not solvable for f(x): {0}")]
    NotSolvable(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
