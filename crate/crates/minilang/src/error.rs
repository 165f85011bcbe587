use std::fmt;

use thiserror::Error;

/// A syntax or name-resolution failure, located in the source.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub file: String,
    pub line: u32,
    /// 1-based column, when the failure is tied to a specific token.
    pub col: Option<u32>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.col {
            Some(col) => write!(f, "{}:{}:{}: {}", self.file, self.line, col, self.message),
            None => write!(f, "{}:{}: {}", self.file, self.line, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("unknown test `{0}`")]
    UnknownTest(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("function `{name}` expects {expected} arguments, got {got}")]
    Arity { name: String, expected: usize, got: usize },
}
