//! Exit-code discipline: 0 success, 2 validation problems (bad arguments,
//! malformed inputs), 1 runtime failures.

use std::fmt;

#[derive(Debug)]
pub enum AppError {
    /// Input did not validate; exit code 2.
    Validation(String),
    /// The operation itself failed; exit code 1.
    Runtime(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Validation(_) => 2,
            AppError::Runtime(_) => 1,
        }
    }

    pub fn validation(err: impl fmt::Display) -> Self {
        AppError::Validation(err.to_string())
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Validation(msg) => write!(f, "invalid input: {msg}"),
            AppError::Runtime(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl std::error::Error for AppError {}

impl From<std::io::Error> for AppError {
    fn from(err: std::io::Error) -> Self {
        AppError::Runtime(err.to_string())
    }
}

pub type AppResult<T> = Result<T, AppError>;
