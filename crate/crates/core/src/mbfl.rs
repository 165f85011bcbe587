//! Mutation-based suspiciousness: Metallaxis and Muse.
//!
//! Mutants are generated only at statements some failing test covers.
//! Every test is run against every mutant; a test kills a mutant when its
//! status changes. Crash and Fail are both failing, but a failing test
//! whose status moves between Crash and Fail is recorded as
//! [`OutcomeChange::FailChanged`]: it counts toward Metallaxis' `f_kill`
//! and not toward Muse's `f2p`. A change of failure message alone is not a
//! kill.

use std::collections::{BTreeMap, BTreeSet};

use locus_minilang::{apply, mutations, ExecOptions, Mutation, OperatorSet, Program, Runner};
use serde::{Deserialize, Serialize};

use crate::entity::Entity;
use crate::spectrum::TestStatus;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutant {
    /// `M` followed by the 1-based index in the full enumeration.
    pub id: String,
    /// Statement entity.
    pub location: Entity,
    pub operator: String,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeChange {
    Unchanged,
    FailToPass,
    PassToFail,
    /// A failing test that stays failing but moves between Crash and Fail.
    FailChanged,
}

impl OutcomeChange {
    pub fn classify(baseline: TestStatus, mutant: TestStatus) -> Self {
        match (baseline.is_failing(), mutant.is_failing()) {
            (true, false) => OutcomeChange::FailToPass,
            (false, true) => OutcomeChange::PassToFail,
            (true, true) if baseline != mutant => OutcomeChange::FailChanged,
            _ => OutcomeChange::Unchanged,
        }
    }

    pub fn is_kill(self) -> bool {
        self != OutcomeChange::Unchanged
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KillRecord {
    pub mutant_id: String,
    pub location: Entity,
    /// Outcome change per test id.
    pub changes: BTreeMap<String, OutcomeChange>,
}

impl KillRecord {
    fn count(&self, pred: impl Fn(OutcomeChange) -> bool) -> u32 {
        self.changes.values().filter(|c| pred(**c)).count() as u32
    }

    pub fn f2p(&self) -> u32 {
        self.count(|c| c == OutcomeChange::FailToPass)
    }

    pub fn p2f(&self) -> u32 {
        self.count(|c| c == OutcomeChange::PassToFail)
    }

    /// Failing tests whose outcome changed.
    pub fn f_kill(&self) -> u32 {
        self.count(|c| matches!(c, OutcomeChange::FailToPass | OutcomeChange::FailChanged))
    }

    /// Passing tests whose outcome changed.
    pub fn p_kill(&self) -> u32 {
        self.p2f()
    }
}

/// Mutants at `failing_covered` statements, in enumeration order, each
/// paired with the edit that produces it.
pub fn generate_mutants(
    program: &Program,
    failing_covered: &BTreeSet<Entity>,
    ops: &OperatorSet,
) -> Vec<(Mutant, Mutation)> {
    mutations(program, ops)
        .into_iter()
        .enumerate()
        .filter_map(|(i, m)| {
            let location = Entity::statement(program.file_name(m.stmt_loc.file), m.stmt_loc.line);
            failing_covered.contains(&location).then(|| {
                let mutant = Mutant {
                    id: format!("M{:04}", i + 1),
                    location,
                    operator: m.operator.tag().to_string(),
                    description: m.description(),
                };
                (mutant, m)
            })
        })
        .collect()
}

/// Runs every test in `baseline` against every mutant. Records come back
/// in mutant order whatever the degree of parallelism.
pub fn build_kill_matrix(
    program: &Program,
    mutants: &[(Mutant, Mutation)],
    baseline: &BTreeMap<String, TestStatus>,
    step_budget: u64,
    jobs: usize,
) -> Vec<KillRecord> {
    let opts = ExecOptions {
        flip: None,
        step_budget,
        trace: false,
    };
    let one = |(mutant, edit): &(Mutant, Mutation)| {
        let mutated = apply(program, edit);
        let runner = Runner::new(&mutated);
        let changes = baseline
            .iter()
            .map(|(test, base)| {
                let run = runner
                    .run_test(test, &opts)
                    .expect("baseline tests exist in every mutant");
                let status = TestStatus::from(run.outcome.status);
                (test.clone(), OutcomeChange::classify(*base, status))
            })
            .collect();
        KillRecord {
            mutant_id: mutant.id.clone(),
            location: mutant.location.clone(),
            changes,
        }
    };
    crate::par::map(jobs, mutants, one)
}

pub fn metallaxis_mutant(k: &KillRecord, f: u32) -> f64 {
    let fk = k.f_kill();
    if fk == 0 {
        return 0.0;
    }
    fk as f64 / (f as f64 * (fk + k.p_kill()) as f64).sqrt()
}

/// Location score = max over its mutants.
pub fn metallaxis(kills: &[KillRecord], f: u32, _p: u32) -> BTreeMap<Entity, f64> {
    let mut out: BTreeMap<Entity, f64> = BTreeMap::new();
    for k in kills {
        let s = metallaxis_mutant(k, f);
        out.entry(k.location.clone()).and_modify(|v| *v = v.max(s)).or_insert(s);
    }
    out
}

/// The Muse weight α relating total f2p and p2f counts.
pub fn muse_alpha(kills: &[KillRecord], f: u32, p: u32) -> f64 {
    let f2p: u32 = kills.iter().map(KillRecord::f2p).sum();
    let p2f: u32 = kills.iter().map(KillRecord::p2f).sum();
    if p2f == 0 || p == 0 {
        return 0.0;
    }
    (f2p as f64 / f as f64) * (p as f64 / p2f as f64)
}

pub fn muse_mutant(k: &KillRecord, f: u32, p: u32, alpha: f64) -> f64 {
    let gain = k.f2p() as f64 / f as f64;
    let loss = if p == 0 { 0.0 } else { alpha * k.p2f() as f64 / p as f64 };
    gain - loss
}

/// Location score = mean over its mutants.
pub fn muse(kills: &[KillRecord], f: u32, p: u32) -> BTreeMap<Entity, f64> {
    let alpha = muse_alpha(kills, f, p);
    let mut acc: BTreeMap<Entity, (f64, u32)> = BTreeMap::new();
    for k in kills {
        let slot = acc.entry(k.location.clone()).or_default();
        slot.0 += muse_mutant(k, f, p, alpha);
        slot.1 += 1;
    }
    acc.into_iter().map(|(e, (sum, n))| (e, sum / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kill(id: &str, line: u32, changes: &[OutcomeChange]) -> KillRecord {
        KillRecord {
            mutant_id: id.into(),
            location: Entity::statement("p", line),
            changes: changes.iter().enumerate().map(|(i, c)| (format!("t{i}"), *c)).collect(),
        }
    }

    use OutcomeChange::*;

    #[test]
    fn classification() {
        use TestStatus::*;
        assert_eq!(OutcomeChange::classify(Fail, Pass), FailToPass);
        assert_eq!(OutcomeChange::classify(Crash, Pass), FailToPass);
        assert_eq!(OutcomeChange::classify(Pass, Crash), PassToFail);
        assert_eq!(OutcomeChange::classify(Crash, Fail), FailChanged);
        assert_eq!(OutcomeChange::classify(Fail, Fail), Unchanged);
        assert_eq!(OutcomeChange::classify(Pass, Pass), Unchanged);
    }

    #[test]
    fn counts() {
        let k = kill("M1", 1, &[FailToPass, FailChanged, PassToFail, Unchanged]);
        assert_eq!((k.f2p(), k.p2f(), k.f_kill(), k.p_kill()), (1, 1, 2, 1));
    }

    #[test]
    fn metallaxis_single_and_max() {
        let one = kill("M1", 6, &[FailToPass, Unchanged]);
        assert_eq!(metallaxis(&[one], 1, 1)[&Entity::statement("p", 6)], 1.0);
        let a = kill("M1", 2, &[FailToPass, Unchanged, PassToFail, PassToFail]);
        let b = kill("M2", 2, &[FailToPass, FailToPass, Unchanged, Unchanged]);
        assert_eq!(metallaxis_mutant(&a, 2), 1.0 / 6f64.sqrt());
        assert_eq!(metallaxis_mutant(&b, 2), 1.0);
        let s = metallaxis(&[a, b], 2, 2)[&Entity::statement("p", 2)];
        assert_eq!(s, 1.0);
    }

    #[test]
    fn muse_fix_mutant_alone() {
        let fix = kill("M1", 6, &[FailToPass, Unchanged]);
        let other = kill("M2", 5, &[Unchanged, Unchanged]);
        let s = muse(&[fix, other], 1, 1);
        assert_eq!(s[&Entity::statement("p", 6)], 1.0);
        assert_eq!(s[&Entity::statement("p", 5)], 0.0);
    }

    #[test]
    fn muse_mean() {
        let a = kill("M1", 4, &[FailToPass, Unchanged]);
        let b = kill("M2", 4, &[Unchanged, Unchanged]);
        assert_eq!(muse(&[a, b], 1, 1)[&Entity::statement("p", 4)], 0.5);
    }

    #[test]
    fn muse_alpha_by_hand() {
        // F=2, P=2, f2p total 2, p2f total 1 -> alpha = (2/2)*(2/1) = 2
        let a = kill("M1", 1, &[FailToPass, FailToPass, Unchanged, Unchanged]);
        let b = kill("M2", 2, &[Unchanged, Unchanged, PassToFail, Unchanged]);
        let kills = [a, b];
        assert_eq!(muse_alpha(&kills, 2, 2), 2.0);
        let s = muse(&kills, 2, 2);
        assert_eq!(s[&Entity::statement("p", 1)], 1.0);
        assert_eq!(s[&Entity::statement("p", 2)], -1.0);
    }
}
