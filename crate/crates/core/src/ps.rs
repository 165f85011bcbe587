//! Predicate switching.
//!
//! Each failing test is re-executed once per candidate predicate instance
//! with that single evaluation negated. Candidates are tried from the last
//! executed instance backwards, up to a per-test budget. A location is
//! critical when some flip there turns some failing test into a pass, and
//! its score is the number of failing tests fixed that way. Branches inside
//! test code are never candidates.

use std::collections::{BTreeMap, BTreeSet};

use locus_minilang::{ExecError, ExecOptions, Flip, Loc, Program, Runner};
use serde::{Deserialize, Serialize};

use crate::entity::Entity;
use crate::model::ProgramModel;
use crate::ranking::{rank, Ranking};
use crate::spectrum::{TestOutcome, TestStatus};

pub const DEFAULT_PS_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PredicateInstance {
    /// Statement entity of the branch condition.
    pub location: Entity,
    pub instance_index: u32,
    pub observed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalPredicate {
    pub location: Entity,
    pub fixed_tests: BTreeSet<String>,
    /// One successful flip: test id and instance index.
    pub witness: (String, u32),
}

/// One attempted flip and the resulting status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipRecord {
    pub test_id: String,
    pub location: Entity,
    pub instance_index: u32,
    pub status: TestStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub test_id: String,
    pub instances: Vec<PredicateInstance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PsRun {
    pub instances: Vec<InstanceRecord>,
    /// In (test, trial) order.
    pub flips: Vec<FlipRecord>,
    pub critical: Vec<CriticalPredicate>,
}

#[derive(Debug, Clone)]
pub struct PsOptions {
    /// Flips per failing test; `None` tries every instance.
    pub budget: Option<usize>,
    pub step_budget: u64,
    pub jobs: usize,
}

impl Default for PsOptions {
    fn default() -> Self {
        Self {
            budget: Some(DEFAULT_PS_BUDGET),
            step_budget: locus_minilang::DEFAULT_STEP_BUDGET,
            jobs: 1,
        }
    }
}

fn to_loc(program: &Program, e: &Entity) -> Loc {
    let file = program
        .file_id(e.file())
        .unwrap_or_else(|| panic!("unknown file {}", e.file()));
    Loc::new(file, e.line())
}

/// Every dynamic branch-condition evaluation of `test`, in execution order.
pub fn record_instances(program: &Program, test: &str, step_budget: u64) -> Result<Vec<PredicateInstance>, ExecError> {
    let run = Runner::new(program).run_test(
        test,
        &ExecOptions {
            flip: None,
            step_budget,
            trace: true,
        },
    )?;
    Ok(run
        .predicates
        .iter()
        .map(|pi| PredicateInstance {
            location: Entity::statement(program.file_name(pi.loc.file), pi.loc.line),
            instance_index: pi.index,
            observed: pi.observed,
        })
        .collect())
}

/// Runs `test` with the given instance's outcome negated.
pub fn switch_and_run(
    program: &Program,
    test: &str,
    location: &Entity,
    instance_index: u32,
    step_budget: u64,
) -> Result<TestOutcome, ExecError> {
    run_flipped(
        &Runner::new(program),
        program,
        test,
        location,
        instance_index,
        step_budget,
    )
}

fn run_flipped(
    runner: &Runner,
    program: &Program,
    test: &str,
    location: &Entity,
    instance_index: u32,
    step_budget: u64,
) -> Result<TestOutcome, ExecError> {
    let opts = ExecOptions {
        flip: Some(Flip {
            loc: to_loc(program, location),
            index: instance_index,
        }),
        step_budget,
        trace: false,
    };
    let run = runner.run_test(test, &opts)?;
    Ok(TestOutcome::from_run(program, &run.outcome))
}

/// Candidate flips for one test: non-test instances, last executed first,
/// capped by `budget`.
pub fn candidates(
    instances: &[PredicateInstance],
    model: &ProgramModel,
    budget: Option<usize>,
) -> Vec<PredicateInstance> {
    instances
        .iter()
        .rev()
        .filter(|pi| !model.is_test_line(pi.location.file(), pi.location.line()))
        .take(budget.unwrap_or(usize::MAX))
        .cloned()
        .collect()
}

/// The full search over `failing_tests`.
pub fn ps_search(
    program: &Program,
    model: &ProgramModel,
    failing_tests: &[String],
    opts: &PsOptions,
) -> Result<PsRun, ExecError> {
    let runner = Runner::new(program);
    let mut instances = Vec::new();
    let mut trials = Vec::new();
    for test in failing_tests {
        let recorded = record_instances(program, test, opts.step_budget)?;
        for pi in candidates(&recorded, model, opts.budget) {
            trials.push((test.clone(), pi));
        }
        instances.push(InstanceRecord {
            test_id: test.clone(),
            instances: recorded,
        });
    }
    let results = crate::par::map(opts.jobs, &trials, |(test, pi)| {
        run_flipped(
            &runner,
            program,
            test,
            &pi.location,
            pi.instance_index,
            opts.step_budget,
        )
    });
    let mut flips = Vec::with_capacity(trials.len());
    for ((test, pi), outcome) in trials.into_iter().zip(results) {
        flips.push(FlipRecord {
            test_id: test,
            location: pi.location,
            instance_index: pi.instance_index,
            status: outcome?.status,
        });
    }
    let critical = critical_from_flips(&flips);
    Ok(PsRun {
        instances,
        flips,
        critical,
    })
}

/// Critical predicates implied by a flip log. The witness of a location is
/// its first successful flip in log order.
pub fn critical_from_flips(flips: &[FlipRecord]) -> Vec<CriticalPredicate> {
    let mut by_loc: BTreeMap<Entity, CriticalPredicate> = BTreeMap::new();
    for f in flips.iter().filter(|f| f.status == TestStatus::Pass) {
        by_loc
            .entry(f.location.clone())
            .or_insert_with(|| CriticalPredicate {
                location: f.location.clone(),
                fixed_tests: BTreeSet::new(),
                witness: (f.test_id.clone(), f.instance_index),
            })
            .fixed_tests
            .insert(f.test_id.clone());
    }
    by_loc.into_values().collect()
}

/// Score = number of failing tests fixed.
pub fn ps_scores(critical: &[CriticalPredicate]) -> BTreeMap<Entity, f64> {
    critical
        .iter()
        .map(|c| (c.location.clone(), c.fixed_tests.len() as f64))
        .collect()
}

pub fn ps_localize(
    program: &Program,
    model: &ProgramModel,
    failing_tests: &[String],
    opts: &PsOptions,
) -> Result<Ranking, ExecError> {
    let run = ps_search(program, model, failing_tests, opts)?;
    Ok(rank(ps_scores(&run.critical)))
}

/// Replays every witness; true when each one passes.
pub fn witnesses_hold(program: &Program, critical: &[CriticalPredicate], step_budget: u64) -> Result<bool, ExecError> {
    for c in critical {
        let (test, index) = &c.witness;
        if switch_and_run(program, test, &c.location, *index, step_budget)?.status != TestStatus::Pass {
            return Ok(false);
        }
    }
    Ok(true)
}
