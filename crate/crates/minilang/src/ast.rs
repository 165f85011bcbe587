//! Abstract syntax tree.
//!
//! Every statement and expression carries a [`Loc`] (file + 1-based line).
//! Columns are not part of the tree, so two trees that differ only in
//! horizontal layout compare equal.

use std::fmt;

/// Index into [`Program::files`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FileId(pub u32);

/// A source position at line granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Loc {
    pub file: FileId,
    pub line: u32,
}

impl Loc {
    pub fn new(file: FileId, line: u32) -> Self {
        Self { file, line }
    }
}

/// A whole program: one or more source files linked together.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    /// Source file names, indexed by [`FileId`].
    pub files: Vec<String>,
    /// Top-level functions in file order, then source order.
    pub functions: Vec<FunctionDecl>,
}

impl Program {
    pub fn file_name(&self, id: FileId) -> &str {
        &self.files[id.0 as usize]
    }

    pub fn file_id(&self, name: &str) -> Option<FileId> {
        self.files.iter().position(|f| f == name).map(|i| FileId(i as u32))
    }

    /// Names of the zero-argument `test_*` functions, in declaration order.
    pub fn test_names(&self) -> Vec<&str> {
        self.functions
            .iter()
            .filter(|f| is_test_name(&f.name) && f.params.is_empty())
            .map(|f| f.name.as_str())
            .collect()
    }

    /// Visits every function (nested ones included) in preorder together
    /// with its dot-qualified name.
    pub fn walk_functions<'a>(&'a self, mut visit: impl FnMut(&str, &'a FunctionDecl)) {
        fn go<'a>(prefix: &str, f: &'a FunctionDecl, visit: &mut dyn FnMut(&str, &'a FunctionDecl)) {
            let qname = if prefix.is_empty() {
                f.name.clone()
            } else {
                format!("{prefix}.{}", f.name)
            };
            visit(&qname, f);
            walk_nested(&f.body, &mut |g| go(&qname, g, visit));
        }
        for f in &self.functions {
            go("", f, &mut visit);
        }
    }
}

fn walk_nested<'a>(body: &'a [Stmt], visit: &mut dyn FnMut(&'a FunctionDecl)) {
    for stmt in body {
        match &stmt.kind {
            StmtKind::FnDecl(f) => visit(f),
            StmtKind::If {
                then_body, else_body, ..
            } => {
                walk_nested(then_body, visit);
                walk_nested(else_body, visit);
            }
            StmtKind::While { body, .. } => walk_nested(body, visit),
            _ => {}
        }
    }
}

/// True for names of test functions.
pub fn is_test_name(name: &str) -> bool {
    name.starts_with("test_")
}

/// True when a qualified name denotes test code: a `test_*` function or
/// anything nested inside one.
pub fn is_test_qualified(qname: &str) -> bool {
    is_test_name(qname.split('.').next().unwrap_or(qname))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    /// Line of the `fn` keyword.
    pub loc: Loc,
    /// Line of the closing brace.
    pub end_line: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Let {
        name: String,
        value: Expr,
    },
    Assign {
        name: String,
        value: Expr,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Return(Option<Expr>),
    Expr(Expr),
    Assert(Expr),
    AssertApprox {
        lhs: Expr,
        rhs: Expr,
        tol: Option<Expr>,
    },
    FnDecl(FunctionDecl),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    Bool(bool),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call { name: String, args: Vec<Expr> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div => 5,
        }
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Names reserved for intrinsics; user functions may not take them.
pub const BUILTINS: &[(&str, usize)] = &[("sqrt", 1), ("pow", 2), ("abs", 1)];

pub fn builtin_arity(name: &str) -> Option<usize> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, arity)| *arity)
}
