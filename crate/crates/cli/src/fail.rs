//! Errors with exit codes and field paths.

use renewal_core::Error;

pub const EXIT_INVALID: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;
pub const EXIT_IO: u8 = 1;

#[derive(Debug)]
pub struct Fail {
    pub code: u8,
    pub path: String,
    pub message: String,
}

impl Fail {
    pub fn invalid(path: &str, message: &str) -> Self {
        Fail {
            code: EXIT_INVALID,
            path: path.to_string(),
            message: message.to_string(),
        }
    }

    pub fn budget(path: &str, message: &str) -> Self {
        Fail {
            code: EXIT_BUDGET,
            path: path.to_string(),
            message: message.to_string(),
        }
    }

    pub fn io(path: &str, e: impl std::fmt::Display) -> Self {
        Fail {
            code: EXIT_IO,
            path: path.to_string(),
            message: e.to_string(),
        }
    }

    /// Map a library error raised while handling the field at `path`.
    pub fn from_core(path: &str, e: Error) -> Self {
        match &e {
            Error::InvalidParameter { field, .. } => Fail::invalid(&format!("{path}.{field}"), &e.to_string()),
            Error::BudgetExceeded { .. } => Fail::budget(path, &e.to_string()),
            Error::Io(_) => Fail::io(path, &e),
            _ => Fail::invalid(path, &e.to_string()),
        }
    }
}

impl std::fmt::Display for Fail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "error at `{}`: {}", self.path, self.message)
    }
}

pub trait WithPath<T> {
    fn at(self, path: &str) -> Result<T, Fail>;
}

impl<T> WithPath<T> for renewal_core::Result<T> {
    fn at(self, path: &str) -> Result<T, Fail> {
        self.map_err(|e| Fail::from_core(path, e))
    }
}
