use alloc::string::String;

/// Errors produced by evaluation, oracles, solvers and bound calculators.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty vector")]
    Empty,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("negative sentiment {value} at index {index}")]
    NegativeSentiment { index: usize, value: f64 },
    #[error("weights are not on the simplex: {0}")]
    OffSimplex(String),
    #[error("weight sequence is not monotone")]
    NonMonotoneWeights,
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("aggregator is not valid for this sentiment sense: {0}")]
    InvalidSense(String),
    #[error("zero sentiment at index {0} makes the gradient undefined")]
    ZeroSentimentGradient(usize),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("grid too large: {points} points exceed the limit of {limit}")]
    GridTooLarge { points: u128, limit: u128 },
    #[error("no grid point lies in the weight set")]
    EmptyGrid,
    #[error("iterative method did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("curvature contract violated: {0}")]
    CurvatureContract(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("domain violation: {0}")]
    Domain(String),
}

pub type Result<T> = core::result::Result<T, Error>;
