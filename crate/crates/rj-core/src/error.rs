use thiserror::Error;

/// Error categories shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument is outside the mathematical domain of the operation.
    #[error("domain: {0}")]
    Domain(String),

    /// A model constructor received inconsistent or unphysical inputs.
    #[error("model: {0}")]
    Model(String),

    /// A precondition on the operation (not on a single argument) was violated.
    #[error("usage: {0}")]
    Usage(String),

    /// A numerical routine failed outright (singular matrix, no eigenbasis).
    #[error("computation: {msg} (condition estimate {condition:.3e})")]
    Computation { msg: String, condition: f64 },

    /// The requested accuracy could not be reached; the best estimate is kept.
    #[error("accuracy: requested tolerance not met, best value {value:.17e} with error {achieved_error:.3e}")]
    Accuracy { value: f64, achieved_error: f64 },

    /// Two independent estimators of the same quantity disagree.
    #[error("consistency: {msg} (relative spread {spread:.3e})")]
    Consistency { msg: String, spread: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
