//! Recursive-descent parser.
//!
//! Grammar, informally:
//!
//! ```text
//! program  := function*
//! function := "fn" IDENT "(" [IDENT ("," IDENT)*] ")" block
//! block    := "{" stmt* "}"
//! stmt     := "let" IDENT "=" expr ";"
//!           | IDENT "=" expr ";"
//!           | "if" expr block ["else" (block | if-stmt)]
//!           | "while" expr block
//!           | "return" [expr] ";"
//!           | "assert" "approx" "(" expr "," expr ["," expr] ")" ";"
//!           | "assert" expr ";"
//!           | function
//!           | expr ";"
//! expr     := or;  or := and ("or" and)*;  and := cmp ("and" cmp)*
//! cmp      := add (("=="|"!="|"<"|"<="|">"|">=") add)*
//! add      := mul (("+"|"-") mul)*;  mul := unary (("*"|"/") unary)*
//! unary    := ("-"|"!") unary | primary
//! primary  := INT | FLOAT | "true" | "false" | IDENT ["(" args ")"] | "(" expr ")"
//! ```
//!
//! A minus sign applied directly to a numeric literal is folded into the
//! literal, so `-1` is a single `Int(-1)` node.

use crate::ast::*;
use crate::error::ParseError;
use crate::lexer::{tokenize, Tok, Token};
use crate::resolve;

/// Parses a single source text as file `main.ml1`.
pub fn parse(src: &str) -> Result<Program, ParseError> {
    Program::from_sources(&[("main.ml1", src)]).map_err(|mut errs| errs.remove(0))
}

impl Program {
    /// Parses and links several files into one program. Errors from every
    /// file are collected; linking only happens when all files parse.
    pub fn from_sources<N: AsRef<str>, S: AsRef<str>>(sources: &[(N, S)]) -> Result<Program, Vec<ParseError>> {
        let program = Self::parse_unlinked(sources)?;
        program.link()?;
        Ok(program)
    }

    /// Syntax-only parse of several files; names are not resolved.
    pub fn parse_unlinked<N: AsRef<str>, S: AsRef<str>>(sources: &[(N, S)]) -> Result<Program, Vec<ParseError>> {
        let mut program = Program::default();
        let mut errors = Vec::new();
        for (idx, (name, src)) in sources.iter().enumerate() {
            let file = FileId(idx as u32);
            program.files.push(name.as_ref().to_string());
            match parse_file(name.as_ref(), file, src.as_ref()) {
                Ok(mut fns) => program.functions.append(&mut fns),
                Err(e) => errors.push(e),
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        Ok(program)
    }

    /// Static name resolution: duplicate and undefined names, arities.
    pub fn link(&self) -> Result<(), Vec<ParseError>> {
        resolve::check(self)
    }
}

fn parse_file(name: &str, file: FileId, src: &str) -> Result<Vec<FunctionDecl>, ParseError> {
    let tokens = tokenize(name, src)?;
    let mut p = Parser {
        name,
        file,
        tokens,
        pos: 0,
    };
    let mut fns = Vec::new();
    while p.peek() != &Tok::Eof {
        fns.push(p.function()?);
    }
    Ok(fns)
}

struct Parser<'a> {
    name: &'a str,
    file: FileId,
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn current(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn loc(&self) -> Loc {
        Loc::new(self.file, self.current().line)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: String) -> ParseError {
        let t = self.current();
        ParseError {
            file: self.name.to_string(),
            line: t.line,
            col: Some(t.col),
            message,
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            Err(self.error_here(format!("expected {what}, found {}", self.peek().describe())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            other => Err(self.error_here(format!("expected {what}, found {}", other.describe()))),
        }
    }

    fn function(&mut self) -> Result<FunctionDecl, ParseError> {
        let loc = self.loc();
        self.expect(Tok::Fn, "`fn`")?;
        let name = self.ident("function name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                params.push(self.ident("parameter name")?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        let (body, end_line) = self.block()?;
        Ok(FunctionDecl {
            name,
            params,
            body,
            loc,
            end_line,
        })
    }

    /// Returns the statements and the line of the closing brace.
    fn block(&mut self) -> Result<(Vec<Stmt>, u32), ParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
            stmts.push(self.stmt()?);
        }
        let close = self.expect(Tok::RBrace, "`}`")?;
        Ok((stmts, close.line))
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let loc = self.loc();
        let kind = match self.peek() {
            Tok::Let => {
                self.bump();
                let name = self.ident("variable name")?;
                self.expect(Tok::Assign, "`=`")?;
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Let { name, value }
            }
            Tok::Ident(_) if *self.peek_at(1) == Tok::Assign => {
                let name = self.ident("variable name")?;
                self.bump();
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Assign { name, value }
            }
            Tok::If => return self.if_stmt(),
            Tok::While => {
                self.bump();
                let cond = self.expr()?;
                let (body, _) = self.block()?;
                StmtKind::While { cond, body }
            }
            Tok::Return => {
                self.bump();
                let value = if *self.peek() == Tok::Semi {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Return(value)
            }
            Tok::Assert => {
                self.bump();
                if *self.peek() == Tok::Approx {
                    self.bump();
                    self.expect(Tok::LParen, "`(`")?;
                    let lhs = self.expr()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let rhs = self.expr()?;
                    let tol = if *self.peek() == Tok::Comma {
                        self.bump();
                        Some(self.expr()?)
                    } else {
                        None
                    };
                    self.expect(Tok::RParen, "`)`")?;
                    self.expect(Tok::Semi, "`;`")?;
                    StmtKind::AssertApprox { lhs, rhs, tol }
                } else {
                    let e = self.expr()?;
                    self.expect(Tok::Semi, "`;`")?;
                    StmtKind::Assert(e)
                }
            }
            Tok::Fn => StmtKind::FnDecl(self.function()?),
            _ => {
                let e = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Expr(e)
            }
        };
        Ok(Stmt { kind, loc })
    }

    fn if_stmt(&mut self) -> Result<Stmt, ParseError> {
        let loc = self.loc();
        self.expect(Tok::If, "`if`")?;
        let cond = self.expr()?;
        let (then_body, _) = self.block()?;
        let else_body = if *self.peek() == Tok::Else {
            self.bump();
            if *self.peek() == Tok::If {
                vec![self.if_stmt()?]
            } else {
                self.block()?.0
            }
        } else {
            Vec::new()
        };
        Ok(Stmt {
            kind: StmtKind::If {
                cond,
                then_body,
                else_body,
            },
            loc,
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(1)
    }

    fn binary_op(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Or => BinOp::Or,
            Tok::And => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            _ => return None,
        })
    }

    /// Precedence climbing; all binary operators are left-associative.
    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            let loc = lhs.loc;
            lhs = Expr {
                kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                loc,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let loc = self.loc();
        let op = match self.peek() {
            Tok::Minus => UnaryOp::Neg,
            Tok::Bang => UnaryOp::Not,
            _ => return self.primary(),
        };
        let op_tok = self.bump();
        let operand = self.unary()?;
        let kind = match (op, operand.kind) {
            (UnaryOp::Neg, ExprKind::Int(v)) => match v.checked_neg() {
                Some(n) => ExprKind::Int(n),
                None => {
                    return Err(ParseError {
                        file: self.name.to_string(),
                        line: op_tok.line,
                        col: Some(op_tok.col),
                        message: "integer literal out of range".into(),
                    })
                }
            },
            (UnaryOp::Neg, ExprKind::Float(v)) => ExprKind::Float(-v),
            (op, kind) => ExprKind::Unary(op, Box::new(Expr { kind, loc: operand.loc })),
        };
        Ok(Expr { kind, loc })
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let loc = self.loc();
        let kind = match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                ExprKind::Int(v)
            }
            Tok::Float(v) => {
                self.bump();
                ExprKind::Float(v)
            }
            Tok::True => {
                self.bump();
                ExprKind::Bool(true)
            }
            Tok::False => {
                self.bump();
                ExprKind::Bool(false)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        loop {
                            args.push(self.expr()?);
                            if *self.peek() == Tok::Comma {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    ExprKind::Call { name, args }
                } else {
                    ExprKind::Var(name)
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                return Ok(inner);
            }
            other => return Err(self.error_here(format!("expected expression, found {}", other.describe()))),
        };
        Ok(Expr { kind, loc })
    }
}
