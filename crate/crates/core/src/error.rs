use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A constructor or operation received parameters outside its domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Evaluation requested exactly on a boundary where the quantity is
    /// undefined or divergent.
    #[error("boundary evaluation: {0}")]
    Boundary(&'static str),

    /// Marginal law undefined for degenerate (alpha, beta) combinations.
    #[error("unsupported marginal: {0}")]
    UnsupportedMarginal(String),

    /// A numerical routine failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Orbit landed exactly on an absorbing fixed point (measure-zero
    /// event; callers resample the initial condition).
    #[error("orbit absorbed at a fixed point")]
    AbsorbedAtFixedPoint,

    /// A truncated-sum tail bound exceeded the requested tolerance.
    #[error("horizon too small: {0}")]
    HorizonTooSmall(String),

    /// Requested table would exceed the memory budget.
    #[error("table too large: {0}")]
    TableTooLarge(String),

    /// Statistical routine called with too few samples.
    #[error("not enough samples: need {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    /// Invalid experiment or run configuration.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
