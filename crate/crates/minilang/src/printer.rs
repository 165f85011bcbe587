//! Pretty-printer.
//!
//! [`print_file`] places every statement and expression on the line recorded
//! in its [`Loc`], so reparsing the output reproduces the original tree,
//! line attribution included.

use crate::ast::*;

/// Renders the functions that belong to `file`.
pub fn print_file(program: &Program, file: FileId) -> String {
    let mut w = Writer::new();
    for f in program.functions.iter().filter(|f| f.loc.file == file) {
        w.function(f);
    }
    w.finish()
}

/// Renders every file of `program` as `(file name, text)` pairs.
pub fn print_program(program: &Program) -> Vec<(String, String)> {
    (0..program.files.len())
        .map(|i| {
            let id = FileId(i as u32);
            (program.file_name(id).to_string(), print_file(program, id))
        })
        .collect()
}

/// Renders an expression on a single line, ignoring recorded lines.
pub fn print_expr(e: &Expr) -> String {
    let mut w = Writer::new();
    w.flat = true;
    w.expr(e);
    w.out
}

struct Writer {
    out: String,
    line: u32,
    depth: usize,
    flat: bool,
}

impl Writer {
    fn new() -> Self {
        Self {
            out: String::new(),
            line: 1,
            depth: 0,
            flat: false,
        }
    }

    fn finish(mut self) -> String {
        if !self.out.is_empty() {
            self.out.push('\n');
        }
        self.out
    }

    fn goto(&mut self, line: u32) {
        if self.flat {
            return;
        }
        if self.line < line {
            while self.line < line {
                self.out.push('\n');
                self.line += 1;
            }
            for _ in 0..self.depth {
                self.out.push_str("    ");
            }
        }
    }

    fn emit(&mut self, s: &str) {
        let glue = self.out.is_empty() || self.out.ends_with(['\n', ' ', '(']) || s.starts_with([')', ',', ';']);
        if !glue {
            self.out.push(' ');
        }
        self.out.push_str(s);
    }

    fn function(&mut self, f: &FunctionDecl) {
        self.goto(f.loc.line);
        self.emit("fn");
        self.emit(&f.name);
        self.out.push('(');
        self.out.push_str(&f.params.join(", "));
        self.out.push(')');
        self.emit("{");
        self.depth += 1;
        self.block(&f.body);
        self.depth -= 1;
        self.goto(f.end_line);
        self.emit("}");
    }

    fn block(&mut self, body: &[Stmt]) {
        for s in body {
            self.stmt(s);
        }
    }

    fn braced(&mut self, body: &[Stmt]) {
        self.emit("{");
        self.depth += 1;
        self.block(body);
        self.depth -= 1;
        self.emit("}");
    }

    fn stmt(&mut self, s: &Stmt) {
        self.goto(s.loc.line);
        match &s.kind {
            StmtKind::Let { name, value } => {
                self.emit("let");
                self.emit(name);
                self.emit("=");
                self.expr(value);
                self.emit(";");
            }
            StmtKind::Assign { name, value } => {
                self.emit(name);
                self.emit("=");
                self.expr(value);
                self.emit(";");
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                self.emit("if");
                self.expr(cond);
                self.braced(then_body);
                match else_body.as_slice() {
                    [] => {}
                    [only] if matches!(only.kind, StmtKind::If { .. }) => {
                        self.emit("else");
                        self.stmt(only);
                    }
                    _ => {
                        self.emit("else");
                        self.braced(else_body);
                    }
                }
            }
            StmtKind::While { cond, body } => {
                self.emit("while");
                self.expr(cond);
                self.braced(body);
            }
            StmtKind::Return(value) => {
                self.emit("return");
                if let Some(v) = value {
                    self.expr(v);
                }
                self.emit(";");
            }
            StmtKind::Expr(e) => {
                self.expr(e);
                self.emit(";");
            }
            StmtKind::Assert(e) => {
                self.emit("assert");
                self.expr(e);
                self.emit(";");
            }
            StmtKind::AssertApprox { lhs, rhs, tol } => {
                self.emit("assert");
                self.emit("approx(");
                self.expr(lhs);
                self.emit(",");
                self.expr(rhs);
                if let Some(t) = tol {
                    self.emit(",");
                    self.expr(t);
                }
                self.emit(")");
                self.emit(";");
            }
            StmtKind::FnDecl(f) => self.function(f),
        }
    }

    fn expr(&mut self, e: &Expr) {
        self.goto(e.loc.line);
        match &e.kind {
            ExprKind::Int(v) => self.emit(&v.to_string()),
            ExprKind::Float(v) => self.emit(&format!("{v:?}")),
            ExprKind::Bool(b) => self.emit(if *b { "true" } else { "false" }),
            ExprKind::Var(name) => self.emit(name),
            ExprKind::Unary(op, inner) => {
                self.emit(match op {
                    UnaryOp::Neg => "-",
                    UnaryOp::Not => "!",
                });
                // `-(-1)` must not collapse into `--1`; wrap anything that is
                // not a plain operand.
                let wrap = !matches!(inner.kind, ExprKind::Var(_) | ExprKind::Call { .. })
                    && !matches!(inner.kind, ExprKind::Int(v) if v >= 0)
                    && !matches!(inner.kind, ExprKind::Float(v) if v.is_sign_positive())
                    && !matches!(inner.kind, ExprKind::Bool(_));
                self.out.push_str(if wrap { "(" } else { "" });
                self.expr_glued(inner);
                if wrap {
                    self.out.push(')');
                }
            }
            ExprKind::Binary(op, l, r) => {
                let p = op.precedence();
                self.operand(l, matches!(&l.kind, ExprKind::Binary(lo, ..) if lo.precedence() < p));
                self.emit(op.symbol());
                self.operand(r, matches!(&r.kind, ExprKind::Binary(ro, ..) if ro.precedence() <= p));
            }
            ExprKind::Call { name, args } => {
                self.emit(name);
                self.out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        self.emit(",");
                    }
                    self.expr(a);
                }
                self.emit(")");
            }
        }
    }

    /// Prints `e` directly after the previous token, without a separator.
    fn expr_glued(&mut self, e: &Expr) {
        let before = self.out.len();
        self.expr(e);
        if self.out[before..].starts_with(' ') {
            self.out.remove(before);
        }
    }

    fn operand(&mut self, e: &Expr, parens: bool) {
        if parens {
            self.goto(e.loc.line);
            self.emit("(");
            self.expr(e);
            self.emit(")");
        } else {
            self.expr(e);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse;

    fn roundtrip(src: &str) {
        let p = parse(src).unwrap();
        let printed = print_file(&p, FileId(0));
        let q = parse(&printed).unwrap_or_else(|e| panic!("{e}\n{printed}"));
        assert_eq!(p, q, "\n{printed}");
    }

    #[test]
    fn preserves_lines() {
        roundtrip(
            "fn equilateral_area(side) {\n    let const = sqrt(3) / 4;\n    if side == 1 {\n        return const; }\n    let term = pow(side, 2);\n    let area = const + term;\n    return area;\n}\n",
        );
    }

    #[test]
    fn parenthesization() {
        roundtrip("fn f(a, b, c) { return (a - (b - c)) * -(a + 1) / (b / c); }");
        roundtrip("fn f(a) { return !(a < 1 or a > 2) and a != 0; }");
        roundtrip("fn f(a) { return -(-a) - -1 - -0.5; }");
    }

    #[test]
    fn multi_line_expression() {
        roundtrip("fn f(a, b) {\n  return a +\n    b *\n    2;\n}");
    }

    #[test]
    fn flat_expression() {
        let p = parse("fn f(a, b) { return a +\n b; }").unwrap();
        let StmtKind::Return(Some(e)) = &p.functions[0].body[0].kind else {
            panic!()
        };
        assert_eq!(print_expr(e), "a + b");
    }
}
