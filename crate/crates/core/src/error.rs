use thiserror::Error;

/// Errors raised by the laboratory. Every variant names the offending input
/// so front ends can report a field path.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("non-finite input to {op}: {value}")]
    NonFinite { op: &'static str, value: f64 },

    #[error("function is not invertible: {0}")]
    NotInvertible(String),

    #[error("window too small: need x_max >= {required} to capture 1 - {missed} of the mass")]
    WindowTooSmall { required: f64, missed: f64 },

    #[error("x = {x} lies outside the support (tail is zero and no tail model)")]
    OutOfSupport { x: f64 },

    #[error("convolution budget exceeded: {what} = {value:e} > {budget:e}")]
    BudgetExceeded { what: String, value: f64, budget: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
