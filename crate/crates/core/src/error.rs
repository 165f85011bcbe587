use std::path::PathBuf;

use thiserror::Error;

use crate::entity::Entity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no failing tests: fault localization needs at least one failure")]
pub struct NoFailingTests;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("duplicate test `{0}`")]
pub struct DuplicateTest(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("functions {0} and {1} claim the same lines")]
pub struct OverlappingSpans(pub Entity, pub Entity);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("stack frame names unknown function `{function}` in {file}")]
pub struct UnknownFunction {
    pub function: String,
    pub file: String,
}

/// A malformed line in an input file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}:{line}: {reason}", path.display())]
pub struct FormatError {
    pub path: PathBuf,
    /// 1-based; 0 when the problem is not tied to a line.
    pub line: usize,
    pub reason: String,
}

/// Everything that can go wrong reading or writing a run store or report.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    DuplicateTest(#[from] DuplicateTest),
    #[error("run store is missing stage `{0}`")]
    MissingStage(String),
}

impl IoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.into(),
            source,
        }
    }
}

fn join_parse(errors: &[locus_minilang::ParseError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")
}

/// Any failure of a localization run, replay or evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{}", join_parse(.0))]
    Parse(Vec<locus_minilang::ParseError>),
    #[error(transparent)]
    NoFailingTests(#[from] NoFailingTests),
    #[error(transparent)]
    DuplicateTest(#[from] DuplicateTest),
    #[error("unknown test `{0}`")]
    UnknownTest(String),
    #[error("test `{0}` is listed as failing but passes")]
    NotActuallyFailing(String),
    #[error(transparent)]
    UnknownFunction(#[from] UnknownFunction),
    #[error(transparent)]
    OverlappingSpans(#[from] OverlappingSpans),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Exec(#[from] locus_minilang::ExecError),
    #[error("no ranking for bug `{0}`")]
    MissingBug(String),
}
