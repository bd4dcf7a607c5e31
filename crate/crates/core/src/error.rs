use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("input {x:?} lies outside the search box")]
    OutOfBox { x: Vec<f64> },

    #[error(
        "kernel matrix ({n}x{n}) is not positive definite even after adding jitter up to {max_jitter:e}"
    )]
    NotPositiveDefinite { n: usize, max_jitter: f64 },

    #[error("learning rate {eta} violates eta < 1/lambda with lambda = {reg}")]
    StepTooLarge { eta: f64, reg: f64 },

    #[error(
        "degenerate prediction interval [{lower}, {upper}] with alpha < 1; build the likelihood with CalibratedLikelihood::widened"
    )]
    DegenerateInterval { lower: f64, upper: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error {error:e} after {evaluations} evaluations")]
    Quadrature {
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("problem `{0}` has no known optimum; report the objective value of the incumbent instead")]
    UnknownOptimum(String),

    #[error("{0}")]
    Other(String),
}
