//! Shared fixtures for integration tests.
#![allow(dead_code)]

pub mod gen;
pub mod props;

use std::path::PathBuf;

use locus_core::pipeline::{run, Project, RunConfig, RunOutput};
use locus_core::{Family, Technique};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn example(name: &str) -> Project {
    Project::load_dir(&corpus_dir().join(name)).expect("corpus example loads")
}

pub fn run_family(project: &Project, family: Family) -> RunOutput {
    run(
        project,
        &RunConfig {
            family,
            ..RunConfig::default()
        },
    )
    .expect("family runs")
}

/// Rank-1 statement lines of `program.ml1` for one technique.
pub fn top_lines(out: &RunOutput, t: Technique) -> Vec<u32> {
    let r = out.ranking(t).expect("technique in family");
    r.top_set()
        .iter()
        .filter(|e| e.file() == "program.ml1")
        .map(|e| e.line())
        .collect()
}
