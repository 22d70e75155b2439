use thiserror::Error;

/// Errors surfaced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller broke an API contract (length mismatch, violated precondition).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A scenario or parameter set failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The numerical state stopped being finite.
    #[error("numeric failure after t = {last_valid_time}: {what}")]
    Numeric { last_valid_time: f64, what: String },

    /// The requested quantity is undefined for these parameters.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
