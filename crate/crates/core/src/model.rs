//! Function spans and statement ownership.
//!
//! A statement line belongs to the innermost function whose span contains
//! it. Spans may nest; two spans that partially overlap, or coincide, make
//! ownership ambiguous and are rejected. Test functions (`test_*` and
//! anything nested inside them) are tracked separately and never own
//! rankable statements.

use std::collections::{BTreeMap, BTreeSet};

use locus_minilang::ast::{Stmt, StmtKind};
use locus_minilang::{is_test_qualified, Program};
use serde::{Deserialize, Serialize};

use crate::entity::Entity;
use crate::error::OverlappingSpans;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProgramModel {
    /// Non-test functions, in entity order.
    functions: Vec<Entity>,
    /// Statement lines of non-test code per file.
    statements: BTreeMap<String, BTreeSet<u32>>,
    /// Spans of test functions per file.
    test_spans: BTreeMap<String, Vec<(u32, u32)>>,
}

fn span(e: &Entity) -> (u32, u32) {
    match e {
        Entity::Function {
            start_line, end_line, ..
        } => (*start_line, *end_line),
        Entity::Statement { line, .. } => (*line, *line),
    }
}

fn check_nesting(functions: &[Entity]) -> Result<(), OverlappingSpans> {
    for (i, a) in functions.iter().enumerate() {
        for b in &functions[i + 1..] {
            if a.file() != b.file() {
                continue;
            }
            let ((a0, a1), (b0, b1)) = (span(a), span(b));
            let disjoint = a1 < b0 || b1 < a0;
            let a_in_b = b0 <= a0 && a1 <= b1;
            let b_in_a = a0 <= b0 && b1 <= a1;
            if !disjoint && (a_in_b == b_in_a) {
                return Err(OverlappingSpans(a.clone(), b.clone()));
            }
        }
    }
    Ok(())
}

/// Innermost function of `functions` containing `file:line`.
fn innermost<'a>(functions: &'a [Entity], file: &str, line: u32) -> Option<&'a Entity> {
    functions
        .iter()
        .filter(|f| {
            f.file() == file && {
                let (s, e) = span(f);
                s <= line && line <= e
            }
        })
        .min_by_key(|f| {
            let (s, e) = span(f);
            e - s
        })
}

/// Lifts statement scores to `functions`: each function gets the maximum
/// score of the statements it owns, or 0 if it owns none. Statements
/// outside every function are ignored.
pub fn to_function_granularity(
    stmt_scores: &BTreeMap<Entity, f64>,
    functions: &[Entity],
) -> Result<BTreeMap<Entity, f64>, OverlappingSpans> {
    check_nesting(functions)?;
    let mut out: BTreeMap<Entity, f64> = functions.iter().map(|f| (f.clone(), 0.0)).collect();
    let mut seen = BTreeSet::new();
    for (stmt, score) in stmt_scores {
        if let Some(owner) = innermost(functions, stmt.file(), stmt.line()) {
            let slot = out.get_mut(owner).expect("owner is a listed function");
            *slot = if seen.insert(owner.clone()) {
                *score
            } else {
                slot.max(*score)
            };
        }
    }
    Ok(out)
}

impl ProgramModel {
    pub fn new(
        mut functions: Vec<Entity>,
        statements: BTreeMap<String, BTreeSet<u32>>,
        test_spans: BTreeMap<String, Vec<(u32, u32)>>,
    ) -> Result<Self, OverlappingSpans> {
        functions.sort();
        functions.dedup();
        check_nesting(&functions)?;
        Ok(Self {
            functions,
            statements,
            test_spans,
        })
    }

    pub fn from_program(program: &Program) -> Result<Self, OverlappingSpans> {
        let mut functions = Vec::new();
        let mut statements: BTreeMap<String, BTreeSet<u32>> = BTreeMap::new();
        let mut test_spans: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        program.walk_functions(|qname, decl| {
            let file = program.file_name(decl.loc.file).to_string();
            if is_test_qualified(qname) {
                if !qname.contains('.') {
                    test_spans.entry(file).or_default().push((decl.loc.line, decl.end_line));
                }
                return;
            }
            functions.push(Entity::function(&file, qname, decl.loc.line, decl.end_line));
            collect_lines(&decl.body, statements.entry(file).or_default());
        });
        Self::new(functions, statements, test_spans)
    }

    pub fn functions(&self) -> &[Entity] {
        &self.functions
    }

    /// True when `file:line` lies inside a test function.
    pub fn is_test_line(&self, file: &str, line: u32) -> bool {
        self.test_spans
            .get(file)
            .is_some_and(|v| v.iter().any(|(s, e)| *s <= line && line <= *e))
    }

    /// True for a rankable statement line.
    pub fn is_statement(&self, file: &str, line: u32) -> bool {
        self.statements.get(file).is_some_and(|s| s.contains(&line)) && !self.is_test_line(file, line)
    }

    pub fn owner(&self, file: &str, line: u32) -> Option<&Entity> {
        innermost(&self.functions, file, line)
    }

    pub fn function_named(&self, file: &str, name: &str) -> Option<&Entity> {
        self.functions.iter().find(|f| f.file() == file && f.name() == name)
    }

    /// Statement entities owned by `function`.
    pub fn statements_of(&self, function: &Entity) -> Vec<Entity> {
        let (s, e) = span(function);
        let file = function.file();
        self.statements
            .get(file)
            .into_iter()
            .flat_map(|lines| lines.range(s..=e))
            .filter(|l| self.owner(file, **l) == Some(function) && !self.is_test_line(file, **l))
            .map(|l| Entity::statement(file, *l))
            .collect()
    }

    /// Like [`to_function_granularity`] over this model's functions, but
    /// keeps only functions that own at least one scored statement.
    pub fn lift_scored(&self, stmt_scores: &BTreeMap<Entity, f64>) -> BTreeMap<Entity, f64> {
        let mut out: BTreeMap<Entity, f64> = BTreeMap::new();
        for (stmt, score) in stmt_scores {
            if let Some(owner) = self.owner(stmt.file(), stmt.line()) {
                out.entry(owner.clone())
                    .and_modify(|s| *s = s.max(*score))
                    .or_insert(*score);
            }
        }
        out
    }
}

fn collect_lines(body: &[Stmt], out: &mut BTreeSet<u32>) {
    for s in body {
        out.insert(s.loc.line);
        match &s.kind {
            StmtKind::If {
                then_body, else_body, ..
            } => {
                collect_lines(then_body, out);
                collect_lines(else_body, out);
            }
            StmtKind::While { body, .. } => collect_lines(body, out),
            StmtKind::FnDecl(g) => collect_lines(&g.body, out),
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(l: u32) -> Entity {
        Entity::statement("p", l)
    }

    #[test]
    fn max_over_owned_statements() {
        let height = Entity::function("p", "area.height", 2, 4);
        let area = Entity::function("p", "area", 1, 8);
        let scores = BTreeMap::from([(st(2), 0.0), (st(3), 1.0), (st(4), 1.0), (st(6), 0.5)]);
        let lifted = to_function_granularity(&scores, &[area.clone(), height.clone()]).unwrap();
        assert_eq!(lifted[&height], 1.0);
        assert_eq!(lifted[&area], 0.5);
    }

    #[test]
    fn unscored_function_gets_zero() {
        let f = Entity::function("p", "f", 10, 12);
        let lifted = to_function_granularity(&BTreeMap::from([(st(3), 0.7)]), std::slice::from_ref(&f)).unwrap();
        assert_eq!(lifted, BTreeMap::from([(f, 0.0)]));
    }

    #[test]
    fn negative_scores_are_kept() {
        let f = Entity::function("p", "f", 1, 3);
        let lifted = to_function_granularity(
            &BTreeMap::from([(st(2), -0.5), (st(3), -0.25)]),
            std::slice::from_ref(&f),
        )
        .unwrap();
        assert_eq!(lifted[&f], -0.25);
    }

    #[test]
    fn partial_overlap_rejected() {
        let a = Entity::function("p", "a", 1, 5);
        let b = Entity::function("p", "b", 4, 9);
        assert!(to_function_granularity(&BTreeMap::new(), &[a.clone(), b]).is_err());
        let a2 = Entity::function("p", "a2", 1, 5);
        assert!(to_function_granularity(&BTreeMap::new(), &[a, a2]).is_err());
        // same lines in different files do not overlap
        let c = Entity::function("q", "c", 1, 5);
        assert!(to_function_granularity(&BTreeMap::new(), &[c, Entity::function("p", "d", 1, 5)]).is_ok());
    }

    #[test]
    fn model_of_nested_program() {
        let p = locus_minilang::parse(
            "fn area(leg, base) {\n  fn height() {\n    let t = base;\n    return t; }\n\n  let a = height();\n  return a;\n}\nfn test_a() {\n  assert area(1, 2) == 2;\n}",
        )
        .unwrap();
        let m = ProgramModel::from_program(&p).unwrap();
        let names: Vec<&str> = m.functions().iter().map(Entity::name).collect();
        assert_eq!(names, ["area", "area.height"]);
        let height = m.function_named("main.ml1", "area.height").unwrap().clone();
        let area = m.function_named("main.ml1", "area").unwrap().clone();
        let lines = |f: &Entity| m.statements_of(f).iter().map(Entity::line).collect::<Vec<_>>();
        assert_eq!(lines(&height), [2, 3, 4]);
        assert_eq!(lines(&area), [6, 7]);
        assert!(m.is_test_line("main.ml1", 10));
        assert!(!m.is_statement("main.ml1", 10));
        assert!(!m.is_statement("main.ml1", 1));
    }
}
