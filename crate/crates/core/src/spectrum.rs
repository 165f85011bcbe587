//! Test outcomes, coverage spectra and tallies.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::entity::Entity;
use crate::error::{DuplicateTest, NoFailingTests};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestStatus {
    Pass,
    Fail,
    Crash,
}

impl TestStatus {
    /// Fail and Crash both count as failing.
    pub fn is_failing(self) -> bool {
        self != TestStatus::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TestStatus::Pass => "pass",
            TestStatus::Fail => "fail",
            TestStatus::Crash => "crash",
        }
    }
}

impl From<locus_minilang::Status> for TestStatus {
    fn from(s: locus_minilang::Status) -> Self {
        match s {
            locus_minilang::Status::Pass => TestStatus::Pass,
            locus_minilang::Status::Fail => TestStatus::Fail,
            locus_minilang::Status::Crash => TestStatus::Crash,
        }
    }
}

/// One active call in a crash trace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Frame {
    pub function: String,
    pub file: String,
    pub line: u32,
}

/// Frames innermost (crash site) first.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StackTrace {
    pub frames: Vec<Frame>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestOutcome {
    pub status: TestStatus,
    pub failure_detail: Option<String>,
    /// Present exactly for crashes, with at least one frame.
    pub stack_trace: Option<StackTrace>,
}

impl TestOutcome {
    pub fn pass() -> Self {
        Self {
            status: TestStatus::Pass,
            failure_detail: None,
            stack_trace: None,
        }
    }

    pub fn fail(detail: impl Into<String>) -> Self {
        Self {
            status: TestStatus::Fail,
            failure_detail: Some(detail.into()),
            stack_trace: None,
        }
    }

    /// Panics on an empty trace.
    pub fn crash(detail: impl Into<String>, trace: StackTrace) -> Self {
        assert!(!trace.frames.is_empty(), "a crash needs at least one frame");
        Self {
            status: TestStatus::Crash,
            failure_detail: Some(detail.into()),
            stack_trace: Some(trace),
        }
    }

    pub fn is_failing(&self) -> bool {
        self.status.is_failing()
    }

    /// Converts an interpreter outcome, naming files through `program`.
    pub fn from_run(program: &locus_minilang::Program, o: &locus_minilang::Outcome) -> Self {
        use locus_minilang::Status;
        let detail = o.detail.clone().unwrap_or_default();
        match o.status {
            Status::Pass => Self::pass(),
            Status::Fail => Self::fail(detail),
            Status::Crash => Self::crash(
                detail,
                StackTrace {
                    frames: o
                        .stack
                        .iter()
                        .map(|f| Frame {
                            function: f.function.clone(),
                            file: program.file_name(f.loc.file).to_string(),
                            line: f.loc.line,
                        })
                        .collect(),
                },
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionRecord {
    pub test_id: String,
    pub outcome: TestOutcome,
    /// Statement entities.
    pub covered: BTreeSet<Entity>,
}

/// Execution records with unique test ids, in insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpectrumMatrix {
    records: Vec<ExecutionRecord>,
}

impl SpectrumMatrix {
    pub fn new(records: Vec<ExecutionRecord>) -> Result<Self, DuplicateTest> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.test_id.as_str()) {
                return Err(DuplicateTest(r.test_id.clone()));
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[ExecutionRecord] {
        &self.records
    }

    pub fn failing(&self) -> usize {
        self.records.iter().filter(|r| r.outcome.is_failing()).count()
    }

    pub fn passing(&self) -> usize {
        self.records.len() - self.failing()
    }

    /// Every entity covered by at least one test.
    pub fn entities(&self) -> BTreeSet<Entity> {
        self.records.iter().flat_map(|r| r.covered.iter().cloned()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TallyCounts {
    pub ef: u32,
    pub ep: u32,
    pub nf: u32,
    pub np: u32,
}

impl TallyCounts {
    pub fn new(ef: u32, ep: u32, nf: u32, np: u32) -> Self {
        Self { ef, ep, nf, np }
    }

    /// Total failing tests.
    pub fn f(&self) -> u32 {
        self.ef + self.nf
    }

    /// Total passing tests.
    pub fn p(&self) -> u32 {
        self.ep + self.np
    }
}

/// Per-entity (ef, ep, nf, np) over every entity covered by some test.
pub fn tally(matrix: &SpectrumMatrix) -> Result<BTreeMap<Entity, TallyCounts>, NoFailingTests> {
    let f = matrix.failing() as u32;
    if f == 0 {
        return Err(NoFailingTests);
    }
    let p = matrix.passing() as u32;
    let mut counts: BTreeMap<Entity, TallyCounts> = BTreeMap::new();
    for r in matrix.records() {
        for e in &r.covered {
            let t = counts.entry(e.clone()).or_default();
            if r.outcome.is_failing() {
                t.ef += 1;
            } else {
                t.ep += 1;
            }
        }
    }
    for t in counts.values_mut() {
        t.nf = f - t.ef;
        t.np = p - t.ep;
    }
    Ok(counts)
}
