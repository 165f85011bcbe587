//! Random buggy programs for the predicate switching oracle.
//!
//! A program is an integer function `f(a, b)` with nested ifs and bounded
//! loops. The buggy version changes one comparison operator. Each test calls
//! `f` and asserts the result of the correct version, so the tests that
//! reach the changed comparison with a different outcome fail.

use std::collections::{BTreeMap, BTreeSet};

use locus_minilang::{call_function, ExecOptions, Flip, Program, Runner, Status, Value};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

#[derive(Debug, Clone)]
pub enum GStmt {
    Assign(usize, GExpr),
    If(GCond, Vec<GStmt>, Vec<GStmt>),
    Loop(u8, Vec<GStmt>),
}

#[derive(Debug, Clone)]
pub enum GExpr {
    Var(usize),
    Lit(i64),
    Bin(&'static str, Box<GExpr>, Box<GExpr>),
}

#[derive(Debug, Clone)]
pub struct GCond {
    pub op: &'static str,
    pub lhs: GExpr,
    pub rhs: GExpr,
}

const VARS: [&str; 4] = ["a", "b", "x", "y"];
const CMP: [&str; 6] = ["<", "<=", ">", ">=", "==", "!="];

fn gexpr() -> impl Strategy<Value = GExpr> {
    let leaf = prop_oneof![(0..4usize).prop_map(GExpr::Var), (-3..6i64).prop_map(GExpr::Lit)];
    leaf.prop_recursive(2, 6, 2, |inner| {
        (prop::sample::select(vec!["+", "-", "*"]), inner.clone(), inner)
            .prop_map(|(op, l, r)| GExpr::Bin(op, Box::new(l), Box::new(r)))
    })
}

fn gcond() -> impl Strategy<Value = GCond> {
    (prop::sample::select(CMP.to_vec()), gexpr(), gexpr()).prop_map(|(op, lhs, rhs)| GCond { op, lhs, rhs })
}

fn gstmts(depth: u32) -> BoxedStrategy<Vec<GStmt>> {
    let assign = (2..4usize, gexpr()).prop_map(|(v, e)| GStmt::Assign(v, e));
    if depth == 0 {
        return prop::collection::vec(assign, 1..3).boxed();
    }
    let stmt = prop_oneof![
        2 => assign,
        2 => (gcond(), gstmts(depth - 1), gstmts(depth - 1)).prop_map(|(c, t, e)| GStmt::If(c, t, e)),
        1 => (1..4u8, gstmts(depth - 1)).prop_map(|(n, b)| GStmt::Loop(n, b)),
    ];
    prop::collection::vec(stmt, 1..4).boxed()
}

fn count_conds(stmts: &[GStmt]) -> usize {
    stmts
        .iter()
        .map(|s| match s {
            GStmt::Assign(..) => 0,
            GStmt::If(_, t, e) => 1 + count_conds(t) + count_conds(e),
            GStmt::Loop(_, b) => count_conds(b),
        })
        .sum()
}

fn expr(e: &GExpr) -> String {
    match e {
        GExpr::Var(i) => VARS[*i].to_string(),
        GExpr::Lit(v) => format!("({v})"),
        GExpr::Bin(op, l, r) => format!("({} {op} {})", expr(l), expr(r)),
    }
}

/// Renders `stmts`; the condition numbered `bug` (preorder) gets `bug_op`.
fn render(stmts: &[GStmt], depth: usize, bug: (usize, &str), next: &mut usize, out: &mut Vec<String>) {
    let pad = "  ".repeat(depth + 1);
    for s in stmts {
        match s {
            GStmt::Assign(v, e) => out.push(format!("{pad}{} = {};", VARS[*v], expr(e))),
            GStmt::If(c, t, e) => {
                let op = if *next == bug.0 { bug.1 } else { c.op };
                *next += 1;
                out.push(format!("{pad}if {} {op} {} {{", expr(&c.lhs), expr(&c.rhs)));
                render(t, depth + 1, bug, next, out);
                out.push(format!("{pad}}} else {{"));
                render(e, depth + 1, bug, next, out);
                out.push(format!("{pad}}}"));
            }
            GStmt::Loop(n, body) => {
                let k = format!("k{depth}");
                out.push(format!("{pad}{k} = 0;"));
                out.push(format!("{pad}while {k} < {n} {{"));
                render(body, depth + 1, bug, next, out);
                out.push(format!("{pad}  {k} = {k} + 1;"));
                out.push(format!("{pad}}}"));
            }
        }
    }
}

fn function_source(body: &[GStmt], bug: (usize, &str)) -> String {
    let mut lines = vec![
        "fn f(a, b) {".to_string(),
        "  let x = 0; let y = 1;".to_string(),
        "  let k0 = 0; let k1 = 0; let k2 = 0; let k3 = 0;".to_string(),
    ];
    render(body, 0, bug, &mut 0, &mut lines);
    lines.push("  return x + 2 * y;".to_string());
    lines.push("}".to_string());
    lines.join("\n")
}

/// A generated buggy program with its failing tests.
#[derive(Debug, Clone)]
pub struct Generated {
    pub source: String,
    pub program: Program,
    pub tests: Vec<String>,
    pub failing: Vec<String>,
}

#[derive(Debug, Clone)]
struct Draft {
    body: Vec<GStmt>,
    bug_cond: usize,
    bug_op: &'static str,
    inputs: Vec<(i64, i64)>,
}

fn draft() -> impl Strategy<Value = Draft> {
    (
        gstmts(3),
        any::<prop::sample::Index>(),
        prop::sample::select(CMP.to_vec()),
        prop::collection::vec((-6..7i64, -6..7i64), 3..6),
    )
        .prop_filter_map("needs a branch", |(body, idx, op, inputs)| {
            let n = count_conds(&body);
            (n > 0).then(|| Draft {
                bug_cond: idx.index(n),
                body,
                bug_op: op,
                inputs,
            })
        })
}

/// Builds the buggy program, or `None` when the draft is unusable: the
/// correct version crashes, or no test fails.
fn build(d: &Draft) -> Option<Generated> {
    let correct = locus_minilang::parse(&function_source(&d.body, (usize::MAX, ""))).ok()?;
    let mut tests_src = Vec::new();
    let mut names = Vec::new();
    for (i, (a, b)) in d.inputs.iter().enumerate() {
        let expected = match call_function(&correct, "f", &[Value::Int(*a), Value::Int(*b)], 100_000).ok()? {
            Ok(Value::Int(v)) => v,
            _ => return None,
        };
        let name = format!("test_{i}");
        tests_src.push(format!(
            "fn {name}() {{\n  let r = f({a}, {b});\n  assert r == {expected};\n}}"
        ));
        names.push(name);
    }
    let source = format!(
        "{}\n{}\n",
        function_source(&d.body, (d.bug_cond, d.bug_op)),
        tests_src.join("\n")
    );
    let program = locus_minilang::parse(&source).ok()?;
    let runner = Runner::new(&program);
    let mut failing = Vec::new();
    for name in &names {
        let run = runner.run_test(name, &ExecOptions::default()).ok()?;
        if run.predicates.len() > 200 {
            return None;
        }
        if run.outcome.status != Status::Pass {
            failing.push(name.clone());
        }
    }
    if failing.is_empty() {
        return None;
    }
    Some(Generated {
        source,
        program,
        tests: names,
        failing,
    })
}

pub fn arb_generated() -> impl Strategy<Value = Generated> {
    draft().prop_filter_map("no usable failing test", |d| build(&d))
}

/// `count` buggy programs from a fixed seed.
pub fn programs(count: usize, seed: u8) -> Vec<Generated> {
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]);
    let mut runner = TestRunner::new_with_rng(Config::default(), rng);
    let strategy = draft();
    let mut out = Vec::new();
    while out.len() < count {
        let d = strategy.new_tree(&mut runner).expect("draft generation").current();
        if let Some(g) = build(&d) {
            out.push(g);
        }
    }
    out
}

/// Critical predicates by exhaustive search: every recorded branch
/// instance of every failing test is negated once. Maps `(file, line)` to
/// the tests that some flip there makes pass.
pub fn brute_force_critical(program: &Program, failing: &[String]) -> BTreeMap<(String, u32), BTreeSet<String>> {
    let runner = Runner::new(program);
    let mut out: BTreeMap<(String, u32), BTreeSet<String>> = BTreeMap::new();
    for test in failing {
        let base = runner.run_test(test, &ExecOptions::default()).expect("test runs");
        for pi in &base.predicates {
            let opts = ExecOptions {
                flip: Some(Flip {
                    loc: pi.loc,
                    index: pi.index,
                }),
                ..ExecOptions::default()
            };
            let flipped = runner.run_test(test, &opts).expect("test runs");
            if flipped.outcome.status == Status::Pass {
                out.entry((program.file_name(pi.loc.file).to_string(), pi.loc.line))
                    .or_default()
                    .insert(test.clone());
            }
        }
    }
    out
}
