use thiserror::Error;

/// Errors produced by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid or degenerate stationary-sequence model.
    #[error("model error: {0}")]
    Model(String),

    /// A parameter is outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Grid or window arguments that do not fit together.
    #[error("grid error: {0}")]
    Grid(String),

    /// The requested level is not a small deviation for this spectrum.
    #[error("regime error: eps^2 = {eps_sq:e} is not below the total mass {total:e}")]
    Regime { eps_sq: f64, total: f64 },

    /// The dense operator would exceed the memory budget.
    #[error("resource error: {needed} bytes requested, budget is {budget} bytes")]
    Resource { needed: u64, budget: u64 },

    /// An iterative method failed to reach its tolerance.
    #[error("numeric error: {what} (achieved {achieved:e} after {iterations} iterations)")]
    Numeric {
        what: String,
        achieved: f64,
        iterations: usize,
    },

    /// A Monte Carlo estimator produced no usable samples.
    #[error("estimate failure: {0}")]
    Estimate(String),

    /// The input shape is not covered by this routine.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Configuration text could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
