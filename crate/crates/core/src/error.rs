use thiserror::Error;

/// Errors raised by the counting-statistics routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),

    /// A ratio whose denominator vanishes for the given inputs.
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The two cascade decay rates coincide; `limit` holds the value of the
    /// limiting form `γ t e^{-γ t}`.
    #[error("degenerate decay rates (limiting value {limit})")]
    DegenerateRates { limit: f64 },

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("mismatched statistic sets: {0}")]
    MismatchedStatistics(String),

    #[error("dataset error: {0}")]
    Dataset(String),
}

impl Error {
    /// True for errors that come from numeric domain violations rather than
    /// from malformed inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::UndefinedRatio(_)
                | Error::Domain(_)
                | Error::DegenerateRates { .. }
                | Error::DivisionByZero(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArguments(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn undefined(msg: impl Into<String>) -> Error {
    Error::UndefinedRatio(msg.into())
}
