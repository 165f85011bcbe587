//! Accuracy of rankings against known fault locations.
//!
//! The expected rank of a faulty entity is its expected 1-based position
//! when every tie group is shuffled uniformly: `g + (t + 1) / 2`, with `g`
//! entities strictly above and a tie group of size `t`. A bug with several
//! faulty entities takes the best (smallest) of them. `@n` counts the bugs
//! whose expected rank is at most `n`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::entity::{Entity, Granularity};
use crate::error::{Error, FormatError, IoError};
use crate::io::format_score;
use crate::pipeline::{run, Project, RunConfig};
use crate::ranking::Ranking;
use crate::store::RunStore;
use crate::technique::{Family, Technique};

pub fn expected_rank(ranking: &Ranking, truth: &BTreeSet<Entity>) -> f64 {
    ranking
        .entries()
        .iter()
        .filter(|e| truth.contains(&e.entity))
        .map(|e| {
            let (above, tied) = ranking.position_of_score(e.score);
            above as f64 + (tied as f64 + 1.0) / 2.0
        })
        .fold(f64::INFINITY, f64::min)
}

/// Bugs whose expected rank is at most `n`. Every bug with a ground truth
/// needs a ranking and vice versa.
pub fn at_n(
    rankings: &BTreeMap<String, Ranking>,
    truths: &BTreeMap<String, BTreeSet<Entity>>,
    n: usize,
) -> Result<usize, Error> {
    if let Some(b) = truths.keys().find(|b| !rankings.contains_key(*b)) {
        return Err(Error::MissingBug(b.clone()));
    }
    if let Some(b) = rankings.keys().find(|b| !truths.contains_key(*b)) {
        return Err(Error::MissingBug(b.clone()));
    }
    Ok(truths
        .iter()
        .filter(|(b, t)| expected_rank(&rankings[*b], t) <= n as f64)
        .count())
}

/// Wall-clock seconds per family recorded in a run store.
pub fn time_report(store: &RunStore) -> Result<BTreeMap<Family, f64>, IoError> {
    let mut out = BTreeMap::new();
    for t in store.timings()? {
        *out.entry(t.family).or_insert(0.0) += t.seconds;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthRef {
    pub file: String,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BugSpec {
    pub bug_id: String,
    /// Relative to the manifest.
    pub program: PathBuf,
    pub tests: PathBuf,
    /// Statement locations; file names relative to the program's directory.
    pub ground_truth: Vec<TruthRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub bugs: Vec<BugSpec>,
}

pub fn read_manifest(path: &Path) -> Result<Manifest, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        IoError::Format(FormatError {
            path: path.to_path_buf(),
            line: e.line(),
            reason: e.to_string(),
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub bug_id: String,
    pub technique: Technique,
    pub expected_rank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub n: usize,
    pub granularity: Granularity,
    pub rows: Vec<EvalRow>,
    /// (bug, family, seconds)
    pub times: Vec<(String, Family, f64)>,
}

impl EvalReport {
    pub fn techniques(&self) -> Vec<Technique> {
        self.rows
            .iter()
            .map(|r| r.technique)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn at_n(&self, t: Technique) -> usize {
        self.rows
            .iter()
            .filter(|r| r.technique == t && r.expected_rank <= self.n as f64)
            .count()
    }

    pub fn expected(&self, bug: &str, t: Technique) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.bug_id == bug && r.technique == t)
            .map(|r| r.expected_rank)
    }

    /// `bug_id,technique,expected_rank`, one row per bug and technique.
    pub fn csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(["bug_id", "technique", "expected_rank"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([r.bug_id.as_str(), r.technique.as_str(), &format_score(r.expected_rank)])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Per-technique summary for people.
    pub fn table(&self) -> String {
        let bugs: BTreeSet<&str> = self.rows.iter().map(|r| r.bug_id.as_str()).collect();
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} bugs, {} granularity, best faulty entity per bug, ties by expected rank",
            bugs.len(),
            self.granularity.as_str()
        );
        let at = format!("@{}", self.n);
        let _ = writeln!(s, "{:<12} {at:>5}  expected rank per bug", "technique");
        for t in self.techniques() {
            let per_bug: Vec<String> = self
                .rows
                .iter()
                .filter(|r| r.technique == t)
                .map(|r| format!("{}={}", r.bug_id, format_rank(r.expected_rank)))
                .collect();
            let _ = writeln!(s, "{:<12} {:>5}  {}", t.as_str(), self.at_n(t), per_bug.join(" "));
        }
        let mut per_family: BTreeMap<Family, f64> = BTreeMap::new();
        for (_, f, secs) in &self.times {
            *per_family.entry(*f).or_insert(0.0) += secs;
        }
        for (f, secs) in per_family {
            let _ = writeln!(s, "time {:<7} {secs:.4}s", f.as_str());
        }
        s
    }
}

fn format_rank(e: f64) -> String {
    if e.is_infinite() {
        "-".to_string()
    } else {
        format!("{e}")
    }
}

fn load_bug(base: &Path, bug: &BugSpec) -> Result<Project, Error> {
    let program = base.join(&bug.program);
    let tests = base.join(&bug.tests);
    let root = program.parent().unwrap_or(base).to_path_buf();
    let name = |p: &Path| {
        p.strip_prefix(&root)
            .map(|r| r.to_string_lossy().replace('\\', "/"))
            .unwrap_or_else(|_| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
    };
    Project::from_files(&[(name(&program), program.clone()), (name(&tests), tests.clone())])
}

/// Statement ground truth as entities of `granularity`.
fn truth_entities(
    bug: &BugSpec,
    project: &Project,
    granularity: Granularity,
    manifest: &Path,
) -> Result<BTreeSet<Entity>, Error> {
    let mut out = BTreeSet::new();
    for t in &bug.ground_truth {
        if !project.model.is_statement(&t.file, t.line) {
            return Err(IoError::Format(FormatError {
                path: manifest.to_path_buf(),
                line: 0,
                reason: format!(
                    "bug `{}`: {}:{} is not a statement of the program",
                    bug.bug_id, t.file, t.line
                ),
            })
            .into());
        }
        out.insert(match granularity {
            Granularity::Statement => Entity::statement(&t.file, t.line),
            Granularity::Function => project
                .model
                .owner(&t.file, t.line)
                .expect("program statements have an owner")
                .clone(),
        });
    }
    if out.is_empty() {
        return Err(IoError::Format(FormatError {
            path: manifest.to_path_buf(),
            line: 0,
            reason: format!("bug `{}` has no ground truth", bug.bug_id),
        })
        .into());
    }
    Ok(out)
}

/// Runs `families` on every bug of the manifest at `path`.
pub fn evaluate_corpus(path: &Path, families: &[Family], config: &RunConfig, n: usize) -> Result<EvalReport, Error> {
    let manifest = read_manifest(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rows = Vec::new();
    let mut times = Vec::new();
    for bug in &manifest.bugs {
        let project = load_bug(base, bug)?;
        let truth = truth_entities(bug, &project, config.granularity, path)?;
        for &family in families {
            let out = run(
                &project,
                &RunConfig {
                    family,
                    ..config.clone()
                },
            )?;
            times.push((bug.bug_id.clone(), family, out.seconds));
            for (t, r) in &out.rankings {
                rows.push(EvalRow {
                    bug_id: bug.bug_id.clone(),
                    technique: *t,
                    expected_rank: expected_rank(r, &truth),
                });
            }
        }
    }
    Ok(EvalReport {
        n,
        granularity: config.granularity,
        rows,
        times,
    })
}
