//! Static name resolution. Every call target and every variable read must be
//! resolvable before a program is accepted.

use std::collections::{HashMap, HashSet};

use crate::ast::*;
use crate::error::ParseError;

struct Scope<'a> {
    locals: HashSet<&'a str>,
    fns: HashMap<&'a str, usize>,
}

struct Checker<'a> {
    program: &'a Program,
    errors: Vec<ParseError>,
}

pub(crate) fn check(program: &Program) -> Result<(), Vec<ParseError>> {
    let mut c = Checker {
        program,
        errors: Vec::new(),
    };
    let mut top = Scope {
        locals: HashSet::new(),
        fns: HashMap::new(),
    };
    for f in &program.functions {
        c.declare_fn(&mut top.fns, f);
    }
    let mut scopes = vec![top];
    for f in &program.functions {
        c.function(&mut scopes, f);
    }
    if c.errors.is_empty() {
        Ok(())
    } else {
        Err(c.errors)
    }
}

fn nested_decls<'a>(body: &'a [Stmt], out: &mut Vec<&'a FunctionDecl>) {
    for s in body {
        match &s.kind {
            StmtKind::FnDecl(f) => out.push(f),
            StmtKind::If {
                then_body, else_body, ..
            } => {
                nested_decls(then_body, out);
                nested_decls(else_body, out);
            }
            StmtKind::While { body, .. } => nested_decls(body, out),
            _ => {}
        }
    }
}

fn let_names<'a>(body: &'a [Stmt], out: &mut HashSet<&'a str>) {
    for s in body {
        match &s.kind {
            StmtKind::Let { name, .. } => {
                out.insert(name);
            }
            StmtKind::If {
                then_body, else_body, ..
            } => {
                let_names(then_body, out);
                let_names(else_body, out);
            }
            StmtKind::While { body, .. } => let_names(body, out),
            _ => {}
        }
    }
}

impl<'a> Checker<'a> {
    fn err(&mut self, loc: Loc, message: String) {
        self.errors.push(ParseError {
            file: self.program.file_name(loc.file).to_string(),
            line: loc.line,
            col: None,
            message,
        });
    }

    fn declare_fn(&mut self, fns: &mut HashMap<&'a str, usize>, f: &'a FunctionDecl) {
        if builtin_arity(&f.name).is_some() || f.name == "approx" {
            self.err(f.loc, format!("`{}` is a reserved name", f.name));
        } else if fns.insert(&f.name, f.params.len()).is_some() {
            self.err(f.loc, format!("duplicate function `{}`", f.name));
        }
    }

    fn function(&mut self, scopes: &mut Vec<Scope<'a>>, f: &'a FunctionDecl) {
        let mut locals = HashSet::new();
        for p in &f.params {
            if !locals.insert(p.as_str()) {
                self.err(f.loc, format!("duplicate parameter `{p}` in `{}`", f.name));
            }
        }
        let_names(&f.body, &mut locals);
        let mut fns = HashMap::new();
        let mut nested = Vec::new();
        nested_decls(&f.body, &mut nested);
        for g in &nested {
            self.declare_fn(&mut fns, g);
        }
        scopes.push(Scope { locals, fns });
        self.block(scopes, &f.body);
        scopes.pop();
    }

    fn block(&mut self, scopes: &mut Vec<Scope<'a>>, body: &'a [Stmt]) {
        for s in body {
            match &s.kind {
                StmtKind::Let { value, .. } => self.expr(scopes, value),
                StmtKind::Assign { name, value } => {
                    let local = scopes.last().is_some_and(|sc| sc.locals.contains(name.as_str()));
                    if !local {
                        let msg = if scopes.iter().any(|sc| sc.locals.contains(name.as_str())) {
                            format!("cannot assign to captured variable `{name}`")
                        } else {
                            format!("assignment to undeclared variable `{name}`")
                        };
                        self.err(s.loc, msg);
                    }
                    self.expr(scopes, value);
                }
                StmtKind::If {
                    cond,
                    then_body,
                    else_body,
                } => {
                    self.expr(scopes, cond);
                    self.block(scopes, then_body);
                    self.block(scopes, else_body);
                }
                StmtKind::While { cond, body } => {
                    self.expr(scopes, cond);
                    self.block(scopes, body);
                }
                StmtKind::Return(value) => {
                    if let Some(v) = value {
                        self.expr(scopes, v);
                    }
                }
                StmtKind::Expr(e) | StmtKind::Assert(e) => self.expr(scopes, e),
                StmtKind::AssertApprox { lhs, rhs, tol } => {
                    self.expr(scopes, lhs);
                    self.expr(scopes, rhs);
                    if let Some(t) = tol {
                        self.expr(scopes, t);
                    }
                }
                StmtKind::FnDecl(f) => self.function(scopes, f),
            }
        }
    }

    fn expr(&mut self, scopes: &[Scope<'a>], e: &'a Expr) {
        match &e.kind {
            ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Bool(_) => {}
            ExprKind::Var(name) => {
                if !scopes.iter().any(|sc| sc.locals.contains(name.as_str())) {
                    self.err(e.loc, format!("undefined variable `{name}`"));
                }
            }
            ExprKind::Unary(_, inner) => self.expr(scopes, inner),
            ExprKind::Binary(_, l, r) => {
                self.expr(scopes, l);
                self.expr(scopes, r);
            }
            ExprKind::Call { name, args } => {
                let arity = builtin_arity(name)
                    .or_else(|| scopes.iter().rev().find_map(|sc| sc.fns.get(name.as_str()).copied()));
                match arity {
                    None => self.err(e.loc, format!("call to undefined function `{name}`")),
                    Some(n) if n != args.len() => {
                        self.err(e.loc, format!("`{name}` expects {n} arguments, got {}", args.len()))
                    }
                    Some(_) => {}
                }
                for a in args {
                    self.expr(scopes, a);
                }
            }
        }
    }
}
