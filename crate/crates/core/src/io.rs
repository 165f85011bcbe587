//! JSON Lines data formats and the ranked CSV.
//!
//! Spectrum lines look like
//!
//! ```text
//! {"test_id":"test_a","outcome":"crash","detail":"...","covered":[{"file":"p.ml1","line":3}],
//!  "stack":[{"function":"f","file":"p.ml1","line":3}]}
//! ```
//!
//! `stack` is required for `crash` and forbidden otherwise. A record with
//! `"excluded": true` was executed but left out of the analysis; readers of
//! the matrix skip it. Kill and trace files hold one serialized
//! [`KillRecord`] or [`TraceRecord`] per line. Blank lines are ignored.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::entity::Entity;
use crate::error::{FormatError, IoError};
use crate::mbfl::KillRecord;
use crate::ranking::Ranking;
use crate::spectrum::{ExecutionRecord, Frame, SpectrumMatrix, StackTrace, TestOutcome, TestStatus};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineRef {
    file: String,
    line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumLine {
    test_id: String,
    outcome: TestStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    detail: Option<String>,
    #[serde(default)]
    covered: Vec<LineRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stack: Option<Vec<Frame>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    excluded: bool,
}

/// Crash trace of one failing test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub test_id: String,
    pub frames: Vec<Frame>,
}

/// A spectrum record plus whether it takes part in the analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredRecord {
    pub record: ExecutionRecord,
    pub excluded: bool,
}

fn format_err(path: &Path, line: usize, reason: impl Into<String>) -> IoError {
    IoError::Format(FormatError {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    })
}

/// Parses JSON Lines text; `path` only labels errors.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str, path: &Path) -> Result<Vec<T>, IoError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| format_err(path, i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_jsonl(&text, path)
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(it).expect("serializable"));
        s.push('\n');
    }
    s
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), IoError> {
    write_text(path, &to_jsonl(items))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    let mut f = fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| IoError::io(path, e))
}

fn to_line(r: &StoredRecord) -> SpectrumLine {
    let o = &r.record.outcome;
    SpectrumLine {
        test_id: r.record.test_id.clone(),
        outcome: o.status,
        detail: o.failure_detail.clone(),
        covered: r
            .record
            .covered
            .iter()
            .map(|e| LineRef {
                file: e.file().to_string(),
                line: e.line(),
            })
            .collect(),
        stack: o.stack_trace.as_ref().map(|t| t.frames.clone()),
        excluded: r.excluded,
    }
}

fn from_line(l: SpectrumLine, path: &Path, n: usize) -> Result<StoredRecord, IoError> {
    let outcome = match (l.outcome, l.stack) {
        (TestStatus::Crash, Some(frames)) if !frames.is_empty() => TestOutcome {
            status: TestStatus::Crash,
            failure_detail: l.detail,
            stack_trace: Some(StackTrace { frames }),
        },
        (TestStatus::Crash, _) => return Err(format_err(path, n, "crash outcome without a stack")),
        (_, Some(_)) => return Err(format_err(path, n, "stack given for a test that did not crash")),
        (status, None) => TestOutcome {
            status,
            failure_detail: l.detail,
            stack_trace: None,
        },
    };
    let mut covered = BTreeSet::new();
    for c in l.covered {
        if c.line == 0 {
            return Err(format_err(path, n, "line numbers start at 1"));
        }
        covered.insert(Entity::statement(c.file, c.line));
    }
    Ok(StoredRecord {
        record: ExecutionRecord {
            test_id: l.test_id,
            outcome,
            covered,
        },
        excluded: l.excluded,
    })
}

/// All records of a spectrum file, excluded ones included.
pub fn parse_spectrum_records(text: &str, path: &Path) -> Result<Vec<StoredRecord>, IoError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let l: SpectrumLine = serde_json::from_str(line).map_err(|e| format_err(path, i + 1, e.to_string()))?;
        out.push(from_line(l, path, i + 1)?);
    }
    Ok(out)
}

/// The analysed matrix: excluded records are dropped.
pub fn parse_spectrum(text: &str, path: &Path) -> Result<SpectrumMatrix, IoError> {
    let records = parse_spectrum_records(text, path)?
        .into_iter()
        .filter(|r| !r.excluded)
        .map(|r| r.record)
        .collect();
    Ok(SpectrumMatrix::new(records)?)
}

pub fn read_spectrum(path: &Path) -> Result<SpectrumMatrix, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_spectrum(&text, path)
}

pub fn spectrum_to_jsonl(records: &[StoredRecord]) -> String {
    let lines: Vec<SpectrumLine> = records.iter().map(to_line).collect();
    to_jsonl(&lines)
}

pub fn write_spectrum(path: &Path, matrix: &SpectrumMatrix) -> Result<(), IoError> {
    let records: Vec<StoredRecord> = matrix
        .records()
        .iter()
        .map(|r| StoredRecord {
            record: r.clone(),
            excluded: false,
        })
        .collect();
    write_text(path, &spectrum_to_jsonl(&records))
}

pub fn read_kills(path: &Path) -> Result<Vec<KillRecord>, IoError> {
    read_jsonl(path)
}

pub fn write_kills(path: &Path, kills: &[KillRecord]) -> Result<(), IoError> {
    write_jsonl(path, kills)
}

pub fn read_traces(path: &Path) -> Result<Vec<TraceRecord>, IoError> {
    let traces: Vec<TraceRecord> = read_jsonl(path)?;
    if let Some(i) = traces.iter().position(|t| t.frames.is_empty()) {
        return Err(format_err(path, i + 1, "empty stack trace"));
    }
    Ok(traces)
}

/// `inf`, `-inf`, or six decimals.
pub fn format_score(s: f64) -> String {
    if s == f64::INFINITY {
        "inf".to_string()
    } else if s == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{s:.6}")
    }
}

/// `rank,entity,score` rows in ranking order, LF line endings.
pub fn ranking_csv(ranking: &Ranking) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["rank", "entity", "score"]).expect("in-memory write");
    for e in ranking.entries() {
        w.write_record([e.rank.to_string(), e.entity.to_string(), format_score(e.score)])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn write_ranking_csv(ranking: &Ranking, path: &Path) -> Result<(), IoError> {
    write_text(path, &ranking_csv(ranking))
}
