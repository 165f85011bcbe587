//! Localizable program units.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A statement (file + line) or a function (qualified name + line span).
///
/// Ordering follows the serialization key `(file, line, name)`, where a
/// function's line is its start line and a statement has an empty name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Entity {
    Statement {
        file: String,
        line: u32,
    },
    Function {
        file: String,
        /// Dot-qualified for nested functions, e.g. `outer.inner`.
        name: String,
        start_line: u32,
        end_line: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    #[default]
    Statement,
    Function,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Statement => "statement",
            Granularity::Function => "function",
        }
    }
}

impl Entity {
    pub fn statement(file: impl Into<String>, line: u32) -> Self {
        Entity::Statement {
            file: file.into(),
            line,
        }
    }

    /// Panics if `start_line > end_line`.
    pub fn function(file: impl Into<String>, name: impl Into<String>, start_line: u32, end_line: u32) -> Self {
        assert!(
            start_line <= end_line,
            "function span {start_line}-{end_line} is inverted"
        );
        Entity::Function {
            file: file.into(),
            name: name.into(),
            start_line,
            end_line,
        }
    }

    pub fn file(&self) -> &str {
        match self {
            Entity::Statement { file, .. } | Entity::Function { file, .. } => file,
        }
    }

    /// Statement line, or a function's first line.
    pub fn line(&self) -> u32 {
        match self {
            Entity::Statement { line, .. } => *line,
            Entity::Function { start_line, .. } => *start_line,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Entity::Statement { .. } => "",
            Entity::Function { name, .. } => name,
        }
    }

    pub fn granularity(&self) -> Granularity {
        match self {
            Entity::Statement { .. } => Granularity::Statement,
            Entity::Function { .. } => Granularity::Function,
        }
    }

    fn end(&self) -> u32 {
        match self {
            Entity::Statement { line, .. } => *line,
            Entity::Function { end_line, .. } => *end_line,
        }
    }
}

impl Ord for Entity {
    fn cmp(&self, other: &Self) -> Ordering {
        (
            self.file(),
            self.line(),
            self.name(),
            self.granularity() as u8,
            self.end(),
        )
            .cmp(&(
                other.file(),
                other.line(),
                other.name(),
                other.granularity() as u8,
                other.end(),
            ))
    }
}

impl PartialOrd for Entity {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Statement { file, line } => write!(f, "{file}:{line}"),
            Entity::Function {
                file,
                name,
                start_line,
                end_line,
            } => write!(f, "{file}:{name}:{start_line}-{end_line}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed entity `{0}`")]
pub struct EntityParseError(pub String);

impl FromStr for Entity {
    type Err = EntityParseError;

    /// Accepts the rendered forms `file:line` and `file:name:start-end`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EntityParseError(s.to_string());
        let (head, last) = s.rsplit_once(':').ok_or_else(bad)?;
        if let Ok(line) = last.parse::<u32>() {
            if head.is_empty() || line == 0 {
                return Err(bad());
            }
            return Ok(Entity::statement(head, line));
        }
        let (file, name) = head.rsplit_once(':').ok_or_else(bad)?;
        let (a, b) = last.split_once('-').ok_or_else(bad)?;
        let start: u32 = a.parse().map_err(|_| bad())?;
        let end: u32 = b.parse().map_err(|_| bad())?;
        if file.is_empty() || name.is_empty() || start == 0 || start > end {
            return Err(bad());
        }
        Ok(Entity::function(file, name, start, end))
    }
}
