//! Property checks shared by the proptest suite and the acceptance runner.
//!
//! Each check takes a runner so callers pick the case count and seed.

use std::collections::{BTreeMap, BTreeSet};

use locus_core::eval::{at_n, expected_rank};
use locus_core::io::ranking_csv;
use locus_core::mbfl::{metallaxis, muse, KillRecord, OutcomeChange};
use locus_core::pipeline::{crash_traces, run, score_st, Project, RunConfig};
use locus_core::sbfl::{dstar, ochiai, sbfl_scores, tarantula};
use locus_core::st::{st_function_scores, st_statement_scores};
use locus_core::store::{replay, RunStore};
use locus_core::{
    rank, tally, to_function_granularity, Entity, ExecutionRecord, Family, Frame, Granularity, ProgramModel,
    SpectrumMatrix, StackTrace, TallyCounts, TestOutcome, TestStatus,
};
use locus_minilang::{ExecOptions, Flip, Runner};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use super::gen::{arb_generated, Generated};

pub type Check = fn(&mut TestRunner) -> Result<(), String>;

pub fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

pub fn deterministic_runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(
        config.clone(),
        proptest::test_runner::TestRng::deterministic_rng(config.rng_algorithm),
    )
}

fn drive<S: Strategy>(
    runner: &mut TestRunner,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn stmt(line: u32) -> Entity {
    Entity::statement("p.ml1", line)
}

fn arb_score() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => (-40..40i32).prop_map(|v| v as f64 / 4.0),
        1 => Just(f64::INFINITY),
    ]
}

/// Suspiciousness as SBFL produces it.
fn arb_nonnegative_score() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => (0..40i32).prop_map(|v| v as f64 / 4.0),
        1 => Just(f64::INFINITY),
    ]
}

fn arb_scores() -> impl Strategy<Value = BTreeMap<Entity, f64>> {
    prop::collection::btree_map((1..60u32).prop_map(stmt), arb_score(), 0..25)
}

/// Outcomes plus a coverage column per entity. Columns are drawn from a
/// small pool so several entities share a column.
fn arb_matrix() -> impl Strategy<Value = SpectrumMatrix> {
    (1..5usize, 0..6usize).prop_flat_map(|(f, p)| {
        let n = f + p;
        let pool = prop::collection::vec(prop::collection::vec(any::<bool>(), n), 1..5);
        (pool, prop::collection::vec(any::<prop::sample::Index>(), 1..12)).prop_map(move |(pool, picks)| {
            let columns: Vec<&Vec<bool>> = picks.iter().map(|i| &pool[i.index(pool.len())]).collect();
            let records = (0..n)
                .map(|t| ExecutionRecord {
                    test_id: format!("t{t}"),
                    outcome: if t < f {
                        TestOutcome::fail("x")
                    } else {
                        TestOutcome::pass()
                    },
                    covered: columns
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| c[t])
                        .map(|(e, _)| stmt(e as u32 + 1))
                        .collect(),
                })
                .collect();
            SpectrumMatrix::new(records).expect("distinct test ids")
        })
    })
}

fn arb_tally() -> impl Strategy<Value = TallyCounts> {
    (0..30u32, 0..30u32, 0..30u32, 0..30u32).prop_map(|(ef, ep, nf, np)| TallyCounts::new(ef, ep, nf, np))
}

// ---------------------------------------------------------------- ranking

pub fn rank_transform_invariance(r: &mut TestRunner) -> Result<(), String> {
    let transforms: [fn(f64) -> f64; 4] = [|s| 3.0 * s - 7.0, |s| s * s * s, f64::atan, |s| s.exp()];
    drive(r, (arb_scores(), 0..4usize), |(scores, which)| {
        let g = transforms[which];
        let before = rank(scores.clone());
        let after = rank(scores.iter().map(|(e, s)| (e.clone(), g(*s))));
        let key = |r: &locus_core::Ranking| {
            r.entries()
                .iter()
                .map(|e| (e.entity.clone(), e.rank))
                .collect::<Vec<_>>()
        };
        prop_assert_eq!(key(&before), key(&after));
        prop_assert_eq!(before.top_set(), after.top_set());
        Ok(())
    })
}

pub fn ranking_is_standard_competition(r: &mut TestRunner) -> Result<(), String> {
    drive(r, arb_scores(), |scores| {
        let ranking = rank(scores.clone());
        prop_assert_eq!(ranking.len(), scores.len());
        for e in ranking.entries() {
            let above = scores.values().filter(|s| **s > e.score).count();
            prop_assert_eq!(e.rank, above + 1);
        }
        // serialization does not depend on input order
        let reversed = rank(scores.iter().rev().map(|(e, s)| (e.clone(), *s)));
        prop_assert_eq!(ranking_csv(&ranking), ranking_csv(&reversed));
        Ok(())
    })
}

// ---------------------------------------------------------------- sbfl

pub fn identical_tally_identical_score(r: &mut TestRunner) -> Result<(), String> {
    drive(r, arb_matrix(), |m| {
        let tallies = tally(&m).expect("has failing tests");
        let scores = sbfl_scores(&m, 2).expect("has failing tests");
        for (a, ta) in &tallies {
            for (b, tb) in &tallies {
                if ta == tb {
                    let (sa, sb) = (&scores[a], &scores[b]);
                    prop_assert_eq!(sa.tarantula.to_bits(), sb.tarantula.to_bits());
                    prop_assert_eq!(sa.ochiai.to_bits(), sb.ochiai.to_bits());
                    prop_assert_eq!(sa.dstar.to_bits(), sb.dstar.to_bits());
                }
            }
        }
        Ok(())
    })
}

pub fn tally_invariants(r: &mut TestRunner) -> Result<(), String> {
    drive(r, arb_matrix(), |m| {
        let t = tally(&m).expect("has failing tests");
        let (f, p) = (m.failing() as u32, m.passing() as u32);
        let covered: BTreeSet<Entity> = m.records().iter().flat_map(|r| r.covered.iter().cloned()).collect();
        prop_assert_eq!(t.keys().cloned().collect::<BTreeSet<_>>(), covered);
        let ef_sum: u32 = t.values().map(|c| c.ef).sum();
        prop_assert!(ef_sum <= f * t.len() as u32);
        for c in t.values() {
            prop_assert_eq!(c.ef + c.nf, f);
            prop_assert_eq!(c.ep + c.np, p);
        }
        Ok(())
    })
}

pub fn sbfl_monotone_in_ef(r: &mut TestRunner) -> Result<(), String> {
    drive(r, (arb_tally(), 1..5u32), |(t, star)| {
        let more = TallyCounts::new(t.ef + 1, t.ep, t.nf, t.np);
        prop_assert!(tarantula(&more) >= tarantula(&t));
        prop_assert!(ochiai(&more) >= ochiai(&t));
        prop_assert!(dstar(&more, star) >= dstar(&t, star));
        Ok(())
    })
}

pub fn zero_sets_agree(r: &mut TestRunner) -> Result<(), String> {
    drive(r, arb_matrix(), |m| {
        let t = tally(&m).expect("has failing tests");
        for (e, s) in sbfl_scores(&m, 2).expect("has failing tests") {
            let zero = t[&e].ef == 0;
            prop_assert_eq!(s.tarantula == 0.0, zero);
            prop_assert_eq!(s.ochiai == 0.0, zero);
            prop_assert_eq!(s.dstar == 0.0, zero);
        }
        Ok(())
    })
}

// ---------------------------------------------------------------- model

/// `count` top-level functions over consecutive lines, some nesting one
/// inner function; returns the model and its statement lines.
fn arb_model() -> impl Strategy<Value = ProgramModel> {
    prop::collection::vec((2..6u32, any::<bool>()), 1..5).prop_map(|shapes| {
        let mut src = String::new();
        for (i, (body, nested)) in shapes.iter().enumerate() {
            src.push_str(&format!("fn g{i}(v) {{\n"));
            if *nested {
                src.push_str("  fn h(w) {\n    let q = w + 1;\n    return q;\n  }\n");
            }
            for k in 0..*body {
                src.push_str(&format!("  let z{k} = v + {k};\n"));
            }
            src.push_str("  return v;\n}\n");
        }
        src.push_str("fn test_m() {\n  let r = g0(1);\n  assert r == 1;\n}\n");
        let program = locus_minilang::Program::from_sources(&[("p.ml1", src.as_str())]).expect("model source parses");
        ProgramModel::from_program(&program).expect("spans nest")
    })
}

fn statement_lines(model: &ProgramModel) -> Vec<u32> {
    let mut lines: Vec<u32> = model
        .functions()
        .iter()
        .flat_map(|f| model.statements_of(f))
        .map(|e| e.line())
        .collect();
    lines.sort_unstable();
    lines.dedup();
    lines
}

pub fn function_granularity_bounded(r: &mut TestRunner) -> Result<(), String> {
    let s = arb_model().prop_flat_map(|m| {
        let lines = statement_lines(&m);
        let n = lines.len();
        (
            Just(m),
            Just(lines),
            prop::collection::vec((any::<prop::sample::Index>(), arb_nonnegative_score()), 0..n.max(1)),
        )
    });
    drive(r, s, |(model, lines, picks)| {
        let scores: BTreeMap<Entity, f64> = picks
            .iter()
            .map(|(i, s)| (stmt(lines[i.index(lines.len())]), *s))
            .collect();
        let functions = to_function_granularity(&scores, model.functions()).expect("spans nest");
        prop_assert_eq!(functions.len(), model.functions().len());
        let top = scores.values().cloned().fold(0.0, f64::max);
        for (f, s) in &functions {
            prop_assert!(*s <= top, "{} scores {} above {}", f, s, top);
            let own: Vec<f64> = model
                .statements_of(f)
                .iter()
                .filter_map(|e| scores.get(e))
                .cloned()
                .collect();
            let expected = if own.is_empty() {
                0.0
            } else {
                own.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            };
            prop_assert_eq!(*s, expected);
        }
        Ok(())
    })
}

// ---------------------------------------------------------------- mbfl

pub fn kill_symmetry(r: &mut TestRunner) -> Result<(), String> {
    let status = prop::sample::select(vec![TestStatus::Pass, TestStatus::Fail, TestStatus::Crash]);
    drive(r, (status.clone(), status), |(a, b)| {
        let forward = OutcomeChange::classify(a, b);
        let backward = OutcomeChange::classify(b, a);
        prop_assert_eq!(forward.is_kill(), backward.is_kill());
        prop_assert_eq!(forward.is_kill(), a != b);
        Ok(())
    })
}

/// Kill records over `f` failing and `p` passing tests at lines 1..=4.
fn arb_kills() -> impl Strategy<Value = (Vec<KillRecord>, u32, u32)> {
    (1..4u32, 0..4u32).prop_flat_map(|(f, p)| {
        let failing = prop::sample::select(vec![
            OutcomeChange::Unchanged,
            OutcomeChange::FailToPass,
            OutcomeChange::FailChanged,
        ]);
        let passing = prop::sample::select(vec![OutcomeChange::Unchanged, OutcomeChange::PassToFail]);
        let one = (
            1..5u32,
            prop::collection::vec(failing, f as usize),
            prop::collection::vec(passing, p as usize),
        );
        prop::collection::vec(one, 1..10).prop_map(move |ms| {
            let kills = ms
                .into_iter()
                .enumerate()
                .map(|(i, (line, fc, pc))| {
                    let changes = fc
                        .into_iter()
                        .enumerate()
                        .map(|(t, c)| (format!("f{t}"), c))
                        .chain(pc.into_iter().enumerate().map(|(t, c)| (format!("p{t}"), c)))
                        .collect();
                    KillRecord {
                        mutant_id: format!("M{i:04}"),
                        location: stmt(line),
                        changes,
                    }
                })
                .collect();
            (kills, f, p)
        })
    })
}

/// Muse location scores computed from scratch.
fn muse_oracle(kills: &[KillRecord], f: u32, p: u32) -> BTreeMap<Entity, f64> {
    let count = |k: &KillRecord, c: OutcomeChange| k.changes.values().filter(|x| **x == c).count() as f64;
    let f2p_total: f64 = kills.iter().map(|k| count(k, OutcomeChange::FailToPass)).sum();
    let p2f_total: f64 = kills.iter().map(|k| count(k, OutcomeChange::PassToFail)).sum();
    let alpha = if p2f_total == 0.0 || p == 0 {
        0.0
    } else {
        f2p_total / f as f64 * (p as f64 / p2f_total)
    };
    let mut groups: BTreeMap<Entity, Vec<f64>> = BTreeMap::new();
    for k in kills {
        let penalty = if p == 0 {
            0.0
        } else {
            alpha * count(k, OutcomeChange::PassToFail) / p as f64
        };
        groups
            .entry(k.location.clone())
            .or_default()
            .push(count(k, OutcomeChange::FailToPass) / f as f64 - penalty);
    }
    groups
        .into_iter()
        .map(|(e, v)| (e, v.iter().sum::<f64>() / v.len() as f64))
        .collect()
}

fn close(a: &BTreeMap<Entity, f64>, b: &BTreeMap<Entity, f64>) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|((ea, sa), (eb, sb))| ea == eb && (sa - sb).abs() <= 1e-12)
}

pub fn duplication_pins_aggregations(r: &mut TestRunner) -> Result<(), String> {
    drive(
        r,
        (arb_kills(), any::<prop::sample::Index>()),
        |((kills, f, p), which)| {
            let mut doubled = kills.clone();
            doubled.push(kills[which.index(kills.len())].clone());
            prop_assert_eq!(metallaxis(&kills, f, p), metallaxis(&doubled, f, p));
            prop_assert!(close(&muse(&kills, f, p), &muse_oracle(&kills, f, p)));
            prop_assert!(close(&muse(&doubled, f, p), &muse_oracle(&doubled, f, p)));
            Ok(())
        },
    )
}

pub fn equivalent_mutants(r: &mut TestRunner) -> Result<(), String> {
    drive(r, (arb_kills(), 1..6u32), |((kills, f, p), line)| {
        let mut more = kills.clone();
        more.push(KillRecord {
            mutant_id: "M9999".into(),
            location: stmt(line),
            changes: kills[0]
                .changes
                .keys()
                .map(|t| (t.clone(), OutcomeChange::Unchanged))
                .collect(),
        });
        let (m0, m1) = (metallaxis(&kills, f, p), metallaxis(&more, f, p));
        let (u0, u1) = (muse(&kills, f, p), muse(&more, f, p));
        let n = kills.iter().filter(|k| k.location == stmt(line)).count() as f64;
        for (e, s) in &m1 {
            prop_assert_eq!(*s, m0.get(e).copied().unwrap_or(0.0));
        }
        match u0.get(&stmt(line)) {
            // an extra zero scales the mean by n/(n+1)
            Some(old) => prop_assert!((u1[&stmt(line)] - old * n / (n + 1.0)).abs() <= 1e-12),
            None => prop_assert_eq!(u1[&stmt(line)], 0.0),
        }
        Ok(())
    })
}

// ---------------------------------------------------------------- st

const ST_SOURCE: &str = "fn outer(a) {
  fn inner(b) {
    let c = b - 1;
    return 10 / c;
  }
  let r = inner(a);
  return r;
}
fn helper(x) {
  let y = x;
  return outer(y);
}
fn lone() {
  return 1;
}
fn test_a() {
  let v = helper(1);
  assert v == 0;
}
";

const ST_FUNCTIONS: [&str; 5] = ["outer", "outer.inner", "helper", "lone", "test_a"];

fn st_model() -> ProgramModel {
    let program = locus_minilang::Program::from_sources(&[("p.ml1", ST_SOURCE)]).expect("fixture parses");
    ProgramModel::from_program(&program).expect("spans nest")
}

fn arb_trace() -> impl Strategy<Value = StackTrace> {
    prop::collection::vec(prop::sample::select(ST_FUNCTIONS.to_vec()), 1..6).prop_map(|names| StackTrace {
        frames: names
            .into_iter()
            .map(|n| Frame {
                function: n.to_string(),
                file: "p.ml1".into(),
                line: 1,
            })
            .collect(),
    })
}

fn arb_records() -> impl Strategy<Value = Vec<ExecutionRecord>> {
    let outcome = prop_oneof![
        Just(TestOutcome::pass()),
        Just(TestOutcome::fail("assert")),
        arb_trace().prop_map(|t| TestOutcome::crash("DomainError", t)),
    ];
    prop::collection::vec(outcome, 1..8).prop_map(|os| {
        os.into_iter()
            .enumerate()
            .map(|(i, outcome)| ExecutionRecord {
                test_id: format!("test_{i}"),
                outcome,
                covered: BTreeSet::new(),
            })
            .collect()
    })
}

pub fn st_same_function_same_score(r: &mut TestRunner) -> Result<(), String> {
    let model = st_model();
    drive(r, prop::collection::vec(arb_trace(), 0..5), |traces| {
        let crashing: Vec<(String, StackTrace)> = traces.into_iter().map(|t| ("t".to_string(), t)).collect();
        let functions = st_function_scores(&crashing, &model).expect("known functions");
        let statements = st_statement_scores(&functions, &model);
        for (e, s) in &statements {
            let owner = model.owner(e.file(), e.line()).expect("owned");
            prop_assert_eq!(*s, functions[owner]);
            prop_assert!(*s > 0.0 && *s <= 1.0);
        }
        for f in model.functions() {
            let scores: BTreeSet<u64> = model
                .statements_of(f)
                .iter()
                .filter_map(|e| statements.get(e))
                .map(|s| s.to_bits())
                .collect();
            prop_assert!(scores.len() <= 1);
        }
        // the innermost non-test frame of any trace scores 1
        for (_, t) in &crashing {
            if let Some(first) = t.frames.iter().find(|f| f.function != "test_a") {
                let e = model.function_named("p.ml1", &first.function).expect("known");
                prop_assert_eq!(functions[e], 1.0);
            }
        }
        Ok(())
    })
}

pub fn st_only_crashing_tests(r: &mut TestRunner) -> Result<(), String> {
    let model = st_model();
    drive(r, arb_records(), |records| {
        let full = SpectrumMatrix::new(records.clone()).expect("distinct ids");
        let crashes = SpectrumMatrix::new(
            records
                .into_iter()
                .filter(|r| r.outcome.status == TestStatus::Crash)
                .collect(),
        )
        .expect("distinct ids");
        for g in [Granularity::Statement, Granularity::Function] {
            let a = score_st(&crash_traces(&full), g, &model).expect("known functions");
            let b = score_st(&crash_traces(&crashes), g, &model).expect("known functions");
            prop_assert_eq!(ranking_csv(&a[0].1), ranking_csv(&b[0].1));
        }
        Ok(())
    })
}

// ---------------------------------------------------------------- eval

pub fn expected_rank_properties(r: &mut TestRunner) -> Result<(), String> {
    drive(
        r,
        (arb_scores(), prop::collection::btree_set(1..60u32, 1..4)),
        |(scores, lines)| {
            let truth: BTreeSet<Entity> = lines.iter().map(|l| stmt(*l)).collect();
            let ranking = rank(scores.clone());
            let e = expected_rank(&ranking, &truth);
            let shifted = rank(scores.iter().map(|(k, s)| (k.clone(), 2.0 * s + 1.0)));
            prop_assert_eq!(e, expected_rank(&shifted, &truth));
            if !scores.keys().any(|k| truth.contains(k)) {
                prop_assert_eq!(e, f64::INFINITY);
            }
            // distinct scores: expected rank is the 1-based index
            let distinct: BTreeMap<Entity, f64> = scores
                .keys()
                .enumerate()
                .map(|(i, k)| (k.clone(), -(i as f64)))
                .collect();
            let plain = rank(distinct);
            for (i, entry) in plain.entries().iter().enumerate() {
                prop_assert_eq!(
                    expected_rank(&plain, &BTreeSet::from([entry.entity.clone()])),
                    i as f64 + 1.0
                );
            }
            Ok(())
        },
    )
}

pub fn at_n_monotone(r: &mut TestRunner) -> Result<(), String> {
    let bug = (arb_scores(), 1..60u32);
    drive(r, (prop::collection::vec(bug, 1..5), 0..20usize), |(bugs, n)| {
        let rankings: BTreeMap<String, locus_core::Ranking> = bugs
            .iter()
            .enumerate()
            .map(|(i, (s, _))| (format!("b{i}"), rank(s.clone())))
            .collect();
        let truths: BTreeMap<String, BTreeSet<Entity>> = bugs
            .iter()
            .enumerate()
            .map(|(i, (_, l))| (format!("b{i}"), BTreeSet::from([stmt(*l)])))
            .collect();
        let lo = at_n(&rankings, &truths, n).expect("aligned");
        let hi = at_n(&rankings, &truths, n + 1).expect("aligned");
        prop_assert!(lo <= hi);
        prop_assert!(hi <= bugs.len());
        Ok(())
    })
}

// ---------------------------------------------------------------- execution

fn project(g: &Generated) -> Project {
    Project::from_sources(&[("main.ml1".to_string(), g.source.clone())]).expect("generated program loads")
}

pub fn interpreter_determinism(r: &mut TestRunner) -> Result<(), String> {
    drive(r, (arb_generated(), any::<prop::sample::Index>()), |(g, pick)| {
        let runner = Runner::new(&g.program);
        for test in &g.tests {
            let a = runner.run_test(test, &ExecOptions::default()).expect("runs");
            let b = runner.run_test(test, &ExecOptions::default()).expect("runs");
            prop_assert_eq!(&a, &b);
            if a.predicates.is_empty() {
                continue;
            }
            let pi = a.predicates[pick.index(a.predicates.len())];
            let opts = ExecOptions {
                flip: Some(Flip {
                    loc: pi.loc,
                    index: pi.index,
                }),
                ..ExecOptions::default()
            };
            let fresh = Runner::new(&g.program);
            prop_assert_eq!(
                runner.run_test(test, &opts).expect("runs"),
                fresh.run_test(test, &opts).expect("runs")
            );
        }
        Ok(())
    })
}

/// Writes a run store per family and checks that replay reproduces every
/// CSV byte for byte, and that parallel runs match sequential ones.
pub fn replay_determinism(r: &mut TestRunner) -> Result<(), String> {
    drive(r, arb_generated(), |g| {
        let project = project(&g);
        for family in [Family::Sbfl, Family::Mbfl, Family::Ps] {
            // generated programs finish in a few thousand steps; a small
            // budget keeps nonterminating mutants cheap
            let config = RunConfig {
                family,
                step_budget: 20_000,
                ..RunConfig::default()
            };
            let out = run(&project, &config).expect("runs");
            let parallel = run(
                &project,
                &RunConfig {
                    jobs: 3,
                    ..config.clone()
                },
            )
            .expect("runs");
            prop_assert_eq!(&out.stages, &parallel.stages);
            let dir = tempfile::tempdir().expect("temp dir");
            let store = RunStore::create(dir.path()).expect("store");
            store.write_run(&out, &config, &project.model).expect("written");
            for (t, ranking) in &out.rankings {
                let on_disk = std::fs::read_to_string(store.path(&t.csv_name())).expect("csv written");
                prop_assert_eq!(&on_disk, &ranking_csv(ranking));
                prop_assert_eq!(&ranking_csv(&replay(&store, *t).expect("replays")), &on_disk);
            }
        }
        Ok(())
    })
}
