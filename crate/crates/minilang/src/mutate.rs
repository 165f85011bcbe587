//! First-order mutation operators.
//!
//! Mutation sites are expression nodes numbered in preorder over the whole
//! program (functions in program order, statements in source order, an
//! operator node before its operands). Candidates at one site follow the
//! operator table order below. Mutants are produced by editing the tree,
//! never the text, so every other node keeps its line.

use std::fmt;

use crate::ast::*;
use crate::printer::print_expr;

const AOR: [BinOp; 4] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div];
const ROR: [BinOp; 6] = [BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operator {
    /// Arithmetic operator replacement.
    Aor,
    /// Relational operator replacement.
    Ror,
    /// Logical connector replacement (`and` <-> `or`).
    Lcr,
    /// Numeric literal minus / plus one.
    Literal,
}

impl Operator {
    pub fn tag(self) -> &'static str {
        match self {
            Operator::Aor => "AOR",
            Operator::Ror => "ROR",
            Operator::Lcr => "LCR",
            Operator::Literal => "LIT",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "AOR" => Operator::Aor,
            "ROR" => Operator::Ror,
            "LCR" => Operator::Lcr,
            "LIT" => Operator::Literal,
            _ => return None,
        })
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperatorSet {
    pub aor: bool,
    pub ror: bool,
    pub lcr: bool,
    pub literal: bool,
}

impl Default for OperatorSet {
    fn default() -> Self {
        Self {
            aor: true,
            ror: true,
            lcr: true,
            literal: true,
        }
    }
}

impl OperatorSet {
    fn allows(&self, op: Operator) -> bool {
        match op {
            Operator::Aor => self.aor,
            Operator::Ror => self.ror,
            Operator::Lcr => self.lcr,
            Operator::Literal => self.literal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Replacement {
    BinOp(BinOp),
    Int(i64),
    Float(f64),
}

/// One single-node edit of a program.
#[derive(Debug, Clone, PartialEq)]
pub struct Mutation {
    /// Preorder index of the edited expression node.
    pub site: usize,
    pub operator: Operator,
    /// Location of the edited expression node.
    pub loc: Loc,
    /// Location of the statement containing it.
    pub stmt_loc: Loc,
    pub replacement: Replacement,
    /// The edited expression before and after, rendered on one line.
    pub before: String,
    pub after: String,
}

impl Mutation {
    pub fn description(&self) -> String {
        format!("{} -> {}", self.before, self.after)
    }
}

fn candidates(e: &Expr, ops: &OperatorSet) -> Vec<(Operator, Replacement)> {
    let mut out = Vec::new();
    match &e.kind {
        ExprKind::Binary(op, ..) => {
            let (operator, table): (Operator, &[BinOp]) = if AOR.contains(op) {
                (Operator::Aor, &AOR)
            } else if ROR.contains(op) {
                (Operator::Ror, &ROR)
            } else {
                (Operator::Lcr, &[BinOp::And, BinOp::Or])
            };
            if ops.allows(operator) {
                out.extend(
                    table
                        .iter()
                        .filter(|alt| *alt != op)
                        .map(|alt| (operator, Replacement::BinOp(*alt))),
                );
            }
        }
        ExprKind::Int(v) if ops.literal => {
            for n in [v.checked_sub(1), v.checked_add(1)].into_iter().flatten() {
                out.push((Operator::Literal, Replacement::Int(n)));
            }
        }
        ExprKind::Float(v) if ops.literal => {
            out.push((Operator::Literal, Replacement::Float(v - 1.0)));
            out.push((Operator::Literal, Replacement::Float(v + 1.0)));
        }
        _ => {}
    }
    out
}

fn replaced(e: &Expr, r: Replacement) -> Expr {
    let mut m = e.clone();
    m.kind = match (&e.kind, r) {
        (ExprKind::Binary(_, l, rhs), Replacement::BinOp(op)) => ExprKind::Binary(op, l.clone(), rhs.clone()),
        (ExprKind::Int(_), Replacement::Int(v)) => ExprKind::Int(v),
        (ExprKind::Float(_), Replacement::Float(v)) => ExprKind::Float(v),
        (kind, r) => panic!("replacement {r:?} does not fit node {kind:?}"),
    };
    m
}

/// All mutations of `program` allowed by `ops`, in enumeration order.
pub fn mutations(program: &Program, ops: &OperatorSet) -> Vec<Mutation> {
    let mut out = Vec::new();
    let mut site = 0usize;
    visit_program(program, &mut |stmt_loc, e| {
        for (operator, replacement) in candidates(e, ops) {
            out.push(Mutation {
                site,
                operator,
                loc: e.loc,
                stmt_loc,
                replacement,
                before: print_expr(e),
                after: print_expr(&replaced(e, replacement)),
            });
        }
        site += 1;
    });
    out
}

/// Returns a copy of `program` with `mutation` applied.
pub fn apply(program: &Program, mutation: &Mutation) -> Program {
    let mut p = program.clone();
    let mut site = 0usize;
    let mut done = false;
    visit_program_mut(&mut p, &mut |e| {
        if site == mutation.site {
            *e = replaced(e, mutation.replacement);
            done = true;
        }
        site += 1;
    });
    assert!(done, "mutation site {} out of range", mutation.site);
    p
}

/// Every mutant of `program` under `ops`, paired with its mutated program.
pub fn mutate(program: &Program, ops: &OperatorSet) -> Vec<(Mutation, Program)> {
    mutations(program, ops)
        .into_iter()
        .map(|m| {
            let p = apply(program, &m);
            (m, p)
        })
        .collect()
}

fn visit_program(p: &Program, f: &mut dyn FnMut(Loc, &Expr)) {
    for func in &p.functions {
        visit_block(&func.body, f);
    }
}

fn visit_block(body: &[Stmt], f: &mut dyn FnMut(Loc, &Expr)) {
    for s in body {
        let at = s.loc;
        let mut here = |e: &Expr| visit_expr(e, &mut |x| f(at, x));
        match &s.kind {
            StmtKind::Let { value, .. } | StmtKind::Assign { value, .. } => here(value),
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => here(cond),
            StmtKind::Return(Some(e)) | StmtKind::Expr(e) | StmtKind::Assert(e) => here(e),
            StmtKind::Return(None) | StmtKind::FnDecl(_) => {}
            StmtKind::AssertApprox { lhs, rhs, tol } => {
                here(lhs);
                here(rhs);
                if let Some(t) = tol {
                    here(t);
                }
            }
        }
        match &s.kind {
            StmtKind::If {
                then_body, else_body, ..
            } => {
                visit_block(then_body, f);
                visit_block(else_body, f);
            }
            StmtKind::While { body, .. } => visit_block(body, f),
            StmtKind::FnDecl(g) => visit_block(&g.body, f),
            _ => {}
        }
    }
}

fn visit_expr(e: &Expr, f: &mut dyn FnMut(&Expr)) {
    f(e);
    match &e.kind {
        ExprKind::Unary(_, inner) => visit_expr(inner, f),
        ExprKind::Binary(_, l, r) => {
            visit_expr(l, f);
            visit_expr(r, f);
        }
        ExprKind::Call { args, .. } => args.iter().for_each(|a| visit_expr(a, f)),
        _ => {}
    }
}

fn visit_program_mut(p: &mut Program, f: &mut dyn FnMut(&mut Expr)) {
    for func in &mut p.functions {
        visit_block_mut(&mut func.body, f);
    }
}

fn visit_block_mut(body: &mut [Stmt], f: &mut dyn FnMut(&mut Expr)) {
    for s in body {
        match &mut s.kind {
            StmtKind::Let { value, .. } | StmtKind::Assign { value, .. } => visit_expr_mut(value, f),
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                visit_expr_mut(cond, f);
                visit_block_mut(then_body, f);
                visit_block_mut(else_body, f);
            }
            StmtKind::While { cond, body } => {
                visit_expr_mut(cond, f);
                visit_block_mut(body, f);
            }
            StmtKind::Return(Some(e)) | StmtKind::Expr(e) | StmtKind::Assert(e) => visit_expr_mut(e, f),
            StmtKind::Return(None) => {}
            StmtKind::AssertApprox { lhs, rhs, tol } => {
                visit_expr_mut(lhs, f);
                visit_expr_mut(rhs, f);
                if let Some(t) = tol {
                    visit_expr_mut(t, f);
                }
            }
            StmtKind::FnDecl(g) => visit_block_mut(&mut g.body, f),
        }
    }
}

// The node is visited before its children, so a replaced node's operands
// are still visited and counted exactly as in the immutable walk.
fn visit_expr_mut(e: &mut Expr, f: &mut dyn FnMut(&mut Expr)) {
    f(e);
    match &mut e.kind {
        ExprKind::Unary(_, inner) => visit_expr_mut(inner, f),
        ExprKind::Binary(_, l, r) => {
            visit_expr_mut(l, f);
            visit_expr_mut(r, f);
        }
        ExprKind::Call { args, .. } => args.iter_mut().for_each(|a| visit_expr_mut(a, f)),
        _ => {}
    }
}
