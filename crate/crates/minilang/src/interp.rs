//! Tree-walking interpreter.
//!
//! Execution is fully deterministic: no I/O, no hashing-order effects on
//! results, IEEE-754 binary64 floats. A run can optionally record line
//! coverage and the sequence of branch-predicate evaluations, and can force
//! a single predicate evaluation to the opposite outcome.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::ast::*;
use crate::error::ExecError;
use crate::printer::print_expr;

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

/// Call depth at which a run is stopped as if its step budget ran out.
pub const MAX_CALL_DEPTH: usize = 2_000;

/// Default tolerance of `assert approx(a, b)`.
pub const DEFAULT_APPROX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Unit,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Unit => f.write_str("()"),
        }
    }
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Bool(_) => "bool",
            Value::Unit => "unit",
        }
    }

    fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Int(v) => Some(v as f64),
            Value::Float(v) => Some(v),
            _ => None,
        }
    }
}

/// Forces the `index`-th evaluation (0-based) of the branch predicate(s) on
/// line `loc` to the negation of its computed value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Flip {
    pub loc: Loc,
    pub index: u32,
}

#[derive(Debug, Clone)]
pub struct ExecOptions {
    pub flip: Option<Flip>,
    pub step_budget: u64,
    /// Record covered lines and predicate instances.
    pub trace: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            flip: None,
            step_budget: DEFAULT_STEP_BUDGET,
            trace: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Pass,
    Fail,
    Crash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrashKind {
    DomainError,
    DivisionByZero,
    TypeError,
    UnboundVariable,
}

impl fmt::Display for CrashKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CrashKind::DomainError => "DomainError",
            CrashKind::DivisionByZero => "DivisionByZero",
            CrashKind::TypeError => "TypeError",
            CrashKind::UnboundVariable => "UnboundVariable",
        })
    }
}

/// One active call at the moment of a crash.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    /// Dot-qualified function name, e.g. `isosceles_area.height`.
    pub function: String,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: Status,
    pub detail: Option<String>,
    pub crash: Option<CrashKind>,
    /// Innermost frame first; non-empty exactly for crashes.
    pub stack: Vec<Frame>,
}

impl Outcome {
    pub fn pass() -> Self {
        Self {
            status: Status::Pass,
            detail: None,
            crash: None,
            stack: Vec::new(),
        }
    }

    pub fn is_failing(&self) -> bool {
        self.status != Status::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PredicateInstance {
    pub loc: Loc,
    /// Occurrence count of evaluations on this line so far.
    pub index: u32,
    pub observed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub outcome: Outcome,
    pub covered: BTreeSet<Loc>,
    pub predicates: Vec<PredicateInstance>,
    pub steps: u64,
}

/// Runs the zero-argument test function `test_name`.
pub fn execute_test(program: &Program, test_name: &str, opts: &ExecOptions) -> Result<RunResult, ExecError> {
    Runner::new(program).run_test(test_name, opts)
}

/// Calls any function by qualified name with explicit arguments. Top-level
/// functions only; nested functions need their enclosing frame.
pub fn call_function(
    program: &Program,
    name: &str,
    args: &[Value],
    step_budget: u64,
) -> Result<Result<Value, Outcome>, ExecError> {
    Runner::new(program).call(name, args, step_budget)
}

struct FnInfo<'p> {
    decl: &'p FunctionDecl,
    qname: String,
    locals: HashSet<&'p str>,
    /// Enclosing function, for nested declarations.
    parent: Option<usize>,
    /// Call-name resolution for calls appearing directly in this body.
    calls: HashMap<&'p str, usize>,
}

/// A program prepared for repeated execution.
pub struct Runner<'p> {
    fns: Vec<FnInfo<'p>>,
    by_name: HashMap<String, usize>,
}

impl<'p> Runner<'p> {
    pub fn new(program: &'p Program) -> Self {
        let mut fns = Vec::new();
        let mut by_name = HashMap::new();
        let mut stack: Vec<(String, usize)> = Vec::new();
        program.walk_functions(|qname, decl| {
            while let Some((q, _)) = stack.last() {
                if qname.starts_with(&format!("{q}.")) {
                    break;
                }
                stack.pop();
            }
            let idx = fns.len();
            let mut locals: HashSet<&str> = decl.params.iter().map(String::as_str).collect();
            collect_lets(&decl.body, &mut locals);
            fns.push(FnInfo {
                decl,
                qname: qname.to_string(),
                locals,
                parent: stack.last().map(|(_, i)| *i),
                calls: HashMap::new(),
            });
            by_name.insert(qname.to_string(), idx);
            stack.push((qname.to_string(), idx));
        });

        for idx in 0..fns.len() {
            let mut names = Vec::new();
            collect_calls(&fns[idx].decl.body, &mut names);
            for name in names {
                let mut scope = Some(idx);
                let mut target = None;
                while let Some(s) = scope {
                    if let Some(&t) = by_name.get(&format!("{}.{name}", fns[s].qname)) {
                        target = Some(t);
                        break;
                    }
                    scope = fns[s].parent;
                }
                if let Some(t) = target.or_else(|| by_name.get(name).copied()) {
                    fns[idx].calls.insert(name, t);
                }
            }
        }
        Self { fns, by_name }
    }

    pub fn run_test(&self, test_name: &str, opts: &ExecOptions) -> Result<RunResult, ExecError> {
        let idx = match self.by_name.get(test_name) {
            Some(&i)
                if is_test_name(test_name) && self.fns[i].parent.is_none() && self.fns[i].decl.params.is_empty() =>
            {
                i
            }
            _ => return Err(ExecError::UnknownTest(test_name.to_string())),
        };
        let mut m = Machine::new(self, opts);
        let result = m.invoke(idx, Vec::new(), None);
        let outcome = match result {
            Ok(_) => Outcome::pass(),
            Err(halt) => halt.into_outcome(),
        };
        Ok(RunResult {
            outcome,
            covered: m.covered,
            predicates: m.predicates,
            steps: m.steps,
        })
    }

    pub fn call(&self, name: &str, args: &[Value], step_budget: u64) -> Result<Result<Value, Outcome>, ExecError> {
        let idx = match self.by_name.get(name) {
            Some(&i) if self.fns[i].parent.is_none() => i,
            _ => return Err(ExecError::UnknownFunction(name.to_string())),
        };
        let expected = self.fns[idx].decl.params.len();
        if expected != args.len() {
            return Err(ExecError::Arity {
                name: name.to_string(),
                expected,
                got: args.len(),
            });
        }
        let opts = ExecOptions {
            flip: None,
            step_budget,
            trace: false,
        };
        let mut m = Machine::new(self, &opts);
        Ok(m.invoke(idx, args.to_vec(), None).map_err(Halt::into_outcome))
    }
}

fn collect_lets<'p>(body: &'p [Stmt], out: &mut HashSet<&'p str>) {
    for s in body {
        match &s.kind {
            StmtKind::Let { name, .. } => {
                out.insert(name);
            }
            StmtKind::If {
                then_body, else_body, ..
            } => {
                collect_lets(then_body, out);
                collect_lets(else_body, out);
            }
            StmtKind::While { body, .. } => collect_lets(body, out),
            _ => {}
        }
    }
}

fn collect_calls<'p>(body: &'p [Stmt], out: &mut Vec<&'p str>) {
    fn expr<'p>(e: &'p Expr, out: &mut Vec<&'p str>) {
        match &e.kind {
            ExprKind::Call { name, args } => {
                out.push(name);
                args.iter().for_each(|a| expr(a, out));
            }
            ExprKind::Unary(_, i) => expr(i, out),
            ExprKind::Binary(_, l, r) => {
                expr(l, out);
                expr(r, out);
            }
            _ => {}
        }
    }
    for s in body {
        match &s.kind {
            StmtKind::Let { value, .. } | StmtKind::Assign { value, .. } => expr(value, out),
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                expr(cond, out);
                collect_calls(then_body, out);
                collect_calls(else_body, out);
            }
            StmtKind::While { cond, body } => {
                expr(cond, out);
                collect_calls(body, out);
            }
            StmtKind::Return(Some(e)) | StmtKind::Expr(e) | StmtKind::Assert(e) => expr(e, out),
            StmtKind::AssertApprox { lhs, rhs, tol } => {
                expr(lhs, out);
                expr(rhs, out);
                if let Some(t) = tol {
                    expr(t, out);
                }
            }
            StmtKind::Return(None) | StmtKind::FnDecl(_) => {}
        }
    }
}

enum Halt {
    Return(Value),
    Crash {
        kind: CrashKind,
        message: String,
        stack: Vec<Frame>,
    },
    Assert(String),
    Budget(String),
}

impl Halt {
    fn into_outcome(self) -> Outcome {
        match self {
            // A `return` escaping the outermost frame never happens: invoke
            // catches it.
            Halt::Return(_) => Outcome::pass(),
            Halt::Crash { kind, message, stack } => Outcome {
                status: Status::Crash,
                detail: Some(format!("{kind}: {message}")),
                crash: Some(kind),
                stack,
            },
            Halt::Assert(msg) | Halt::Budget(msg) => Outcome {
                status: Status::Fail,
                detail: Some(msg),
                crash: None,
                stack: Vec::new(),
            },
        }
    }
}

struct ActiveFrame<'p> {
    fn_idx: usize,
    vars: HashMap<&'p str, Value>,
    parent: Option<usize>,
    line: Loc,
}

struct Machine<'r, 'p> {
    runner: &'r Runner<'p>,
    frames: Vec<ActiveFrame<'p>>,
    steps: u64,
    budget: u64,
    trace: bool,
    flip: Option<Flip>,
    pred_counts: HashMap<Loc, u32>,
    covered: BTreeSet<Loc>,
    predicates: Vec<PredicateInstance>,
}

type Exec<T> = Result<T, Halt>;

impl<'r, 'p> Machine<'r, 'p> {
    fn new(runner: &'r Runner<'p>, opts: &ExecOptions) -> Self {
        Self {
            runner,
            frames: Vec::new(),
            steps: 0,
            budget: opts.step_budget,
            trace: opts.trace,
            flip: opts.flip,
            pred_counts: HashMap::new(),
            covered: BTreeSet::new(),
            predicates: Vec::new(),
        }
    }

    fn tick(&mut self) -> Exec<()> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(Halt::Budget(format!("step budget exhausted ({} steps)", self.budget)));
        }
        Ok(())
    }

    fn crash<T>(&self, kind: CrashKind, message: impl Into<String>) -> Exec<T> {
        let stack = self
            .frames
            .iter()
            .rev()
            .map(|f| Frame {
                function: self.runner.fns[f.fn_idx].qname.clone(),
                loc: f.line,
            })
            .collect();
        Err(Halt::Crash {
            kind,
            message: message.into(),
            stack,
        })
    }

    fn set_line(&mut self, loc: Loc) {
        if let Some(f) = self.frames.last_mut() {
            f.line = loc;
        }
    }

    fn invoke(&mut self, fn_idx: usize, args: Vec<Value>, parent: Option<usize>) -> Exec<Value> {
        self.tick()?;
        if self.frames.len() >= MAX_CALL_DEPTH {
            return Err(Halt::Budget(format!(
                "call depth limit exceeded ({MAX_CALL_DEPTH} frames)"
            )));
        }
        let info = &self.runner.fns[fn_idx];
        let decl = info.decl;
        let vars = decl.params.iter().map(String::as_str).zip(args).collect();
        self.frames.push(ActiveFrame {
            fn_idx,
            vars,
            parent,
            line: decl.loc,
        });
        let result = stacker::maybe_grow(64 * 1024, 1024 * 1024, || self.block(&decl.body));
        self.frames.pop();
        match result {
            Ok(()) => Ok(Value::Unit),
            Err(Halt::Return(v)) => Ok(v),
            Err(other) => Err(other),
        }
    }

    fn block(&mut self, body: &'p [Stmt]) -> Exec<()> {
        for s in body {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn predicate(&mut self, cond: &'p Expr, loc: Loc) -> Exec<bool> {
        let observed = match self.expr(cond)? {
            Value::Bool(b) => b,
            other => {
                self.set_line(loc);
                return self.crash(
                    CrashKind::TypeError,
                    format!("condition must be bool, got {}", other.type_name()),
                );
            }
        };
        let counter = self.pred_counts.entry(loc).or_insert(0);
        let index = *counter;
        *counter += 1;
        if self.trace {
            self.predicates.push(PredicateInstance { loc, index, observed });
        }
        let forced = self.flip == Some(Flip { loc, index });
        Ok(observed ^ forced)
    }

    fn stmt(&mut self, s: &'p Stmt) -> Exec<()> {
        self.tick()?;
        self.set_line(s.loc);
        if self.trace {
            self.covered.insert(s.loc);
        }
        match &s.kind {
            StmtKind::Let { name, value } | StmtKind::Assign { name, value } => {
                let v = self.expr(value)?;
                self.frames
                    .last_mut()
                    .expect("active frame")
                    .vars
                    .insert(name.as_str(), v);
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                if self.predicate(cond, s.loc)? {
                    self.block(then_body)?;
                } else {
                    self.block(else_body)?;
                }
            }
            StmtKind::While { cond, body } => loop {
                self.set_line(s.loc);
                if !self.predicate(cond, s.loc)? {
                    break;
                }
                self.block(body)?;
                self.tick()?;
            },
            StmtKind::Return(value) => {
                let v = match value {
                    Some(e) => self.expr(e)?,
                    None => Value::Unit,
                };
                return Err(Halt::Return(v));
            }
            StmtKind::Expr(e) => {
                self.expr(e)?;
            }
            StmtKind::Assert(e) => match self.expr(e)? {
                Value::Bool(true) => {}
                Value::Bool(false) => {
                    return Err(Halt::Assert(format!(
                        "assertion failed at line {}: {}",
                        s.loc.line,
                        print_expr(e)
                    )))
                }
                other => {
                    self.set_line(s.loc);
                    return self.crash(
                        CrashKind::TypeError,
                        format!("assert needs bool, got {}", other.type_name()),
                    );
                }
            },
            StmtKind::AssertApprox { lhs, rhs, tol } => {
                let a = self.expr(lhs)?;
                let b = self.expr(rhs)?;
                let t = match tol {
                    Some(t) => self.expr(t)?,
                    None => Value::Float(DEFAULT_APPROX_TOL),
                };
                self.set_line(s.loc);
                let (Some(x), Some(y), Some(tv)) = (a.as_f64(), b.as_f64(), t.as_f64()) else {
                    return self.crash(CrashKind::TypeError, "approx needs numeric operands");
                };
                if !approx_eq(x, y, tv) {
                    return Err(Halt::Assert(format!(
                        "assertion failed at line {}: approx({a}, {b}, {t})",
                        s.loc.line
                    )));
                }
            }
            StmtKind::FnDecl(_) => {}
        }
        Ok(())
    }

    fn lookup(&self, name: &str, e: &Expr) -> Exec<Value> {
        let mut idx = self.frames.len() - 1;
        loop {
            let frame = &self.frames[idx];
            if self.runner.fns[frame.fn_idx].locals.contains(name) {
                return match frame.vars.get(name) {
                    Some(v) => Ok(*v),
                    None => self.crash(
                        CrashKind::UnboundVariable,
                        format!("`{name}` read before assignment at line {}", e.loc.line),
                    ),
                };
            }
            match frame.parent {
                Some(p) => idx = p,
                None => return self.crash(CrashKind::UnboundVariable, format!("`{name}` is not in scope")),
            }
        }
    }

    fn expr(&mut self, e: &'p Expr) -> Exec<Value> {
        match &e.kind {
            ExprKind::Int(v) => Ok(Value::Int(*v)),
            ExprKind::Float(v) => Ok(Value::Float(*v)),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::Var(name) => self.lookup(name, e),
            ExprKind::Unary(op, inner) => {
                let v = self.expr(inner)?;
                match (op, v) {
                    (UnaryOp::Neg, Value::Int(i)) => match i.checked_neg() {
                        Some(n) => Ok(Value::Int(n)),
                        None => self.crash(CrashKind::DomainError, "integer overflow"),
                    },
                    (UnaryOp::Neg, Value::Float(f)) => Ok(Value::Float(-f)),
                    (UnaryOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                    (op, v) => self.crash(
                        CrashKind::TypeError,
                        format!("bad operand {} for {:?}", v.type_name(), op),
                    ),
                }
            }
            ExprKind::Binary(BinOp::And, l, r) | ExprKind::Binary(BinOp::Or, l, r) => {
                let is_and = matches!(e.kind, ExprKind::Binary(BinOp::And, ..));
                let lv = self.expr_bool(l)?;
                if lv != is_and {
                    return Ok(Value::Bool(lv));
                }
                Ok(Value::Bool(self.expr_bool(r)?))
            }
            ExprKind::Binary(op, l, r) => {
                let lv = self.expr(l)?;
                let rv = self.expr(r)?;
                self.binary(*op, lv, rv)
            }
            ExprKind::Call { name, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.expr(a)?);
                }
                self.set_line(e.loc);
                if let Some(_arity) = builtin_arity(name) {
                    return self.builtin(name, &vals);
                }
                let caller = self.frames.len() - 1;
                let callee = *self.runner.fns[self.frames[caller].fn_idx]
                    .calls
                    .get(name.as_str())
                    .expect("calls are resolved statically");
                let parent = self.runner.fns[callee].parent.map(|enclosing| {
                    let mut f = caller;
                    while self.frames[f].fn_idx != enclosing {
                        f = self.frames[f].parent.expect("nested function called outside its scope");
                    }
                    f
                });
                self.invoke(callee, vals, parent)
            }
        }
    }

    fn expr_bool(&mut self, e: &'p Expr) -> Exec<bool> {
        match self.expr(e)? {
            Value::Bool(b) => Ok(b),
            other => self.crash(
                CrashKind::TypeError,
                format!("logical operand must be bool, got {}", other.type_name()),
            ),
        }
    }

    fn binary(&self, op: BinOp, l: Value, r: Value) -> Exec<Value> {
        use BinOp::*;
        match op {
            Add | Sub | Mul => {
                if let (Value::Int(a), Value::Int(b)) = (l, r) {
                    let res = match op {
                        Add => a.checked_add(b),
                        Sub => a.checked_sub(b),
                        _ => a.checked_mul(b),
                    };
                    return match res {
                        Some(v) => Ok(Value::Int(v)),
                        None => self.crash(CrashKind::DomainError, "integer overflow"),
                    };
                }
                let (a, b) = self.numeric(op, l, r)?;
                Ok(Value::Float(match op {
                    Add => a + b,
                    Sub => a - b,
                    _ => a * b,
                }))
            }
            Div => {
                let (a, b) = self.numeric(op, l, r)?;
                if b == 0.0 {
                    return self.crash(CrashKind::DivisionByZero, "division by zero");
                }
                Ok(Value::Float(a / b))
            }
            Eq | Ne => {
                let equal = match (l, r) {
                    (Value::Int(a), Value::Int(b)) => a == b,
                    (Value::Bool(a), Value::Bool(b)) => a == b,
                    _ => {
                        let (a, b) = self.numeric(op, l, r)?;
                        a == b
                    }
                };
                Ok(Value::Bool(equal == (op == Eq)))
            }
            Lt | Le | Gt | Ge => {
                let ord = match (l, r) {
                    (Value::Int(a), Value::Int(b)) => a.partial_cmp(&b),
                    _ => {
                        let (a, b) = self.numeric(op, l, r)?;
                        a.partial_cmp(&b)
                    }
                };
                let Some(ord) = ord else {
                    return Ok(Value::Bool(false));
                };
                Ok(Value::Bool(match op {
                    Lt => ord.is_lt(),
                    Le => ord.is_le(),
                    Gt => ord.is_gt(),
                    _ => ord.is_ge(),
                }))
            }
            And | Or => unreachable!("short-circuit operators are evaluated in expr"),
        }
    }

    fn numeric(&self, op: BinOp, l: Value, r: Value) -> Exec<(f64, f64)> {
        match (l.as_f64(), r.as_f64()) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => self.crash(
                CrashKind::TypeError,
                format!(
                    "unsupported operands for `{op}`: {} and {}",
                    l.type_name(),
                    r.type_name()
                ),
            ),
        }
    }

    fn builtin(&self, name: &str, args: &[Value]) -> Exec<Value> {
        let num = |i: usize| -> Exec<f64> {
            args[i].as_f64().map_or_else(
                || {
                    self.crash(
                        CrashKind::TypeError,
                        format!("{name} needs a number, got {}", args[i].type_name()),
                    )
                },
                Ok,
            )
        };
        match name {
            "sqrt" => {
                let x = num(0)?;
                if x < 0.0 || x.is_nan() {
                    return self.crash(CrashKind::DomainError, "math domain error (sqrt)");
                }
                Ok(Value::Float(x.sqrt()))
            }
            "pow" => {
                let (x, y) = (num(0)?, num(1)?);
                if x == 0.0 && y < 0.0 {
                    return self.crash(CrashKind::DomainError, "math domain error (pow)");
                }
                let v = x.powf(y);
                if v.is_nan() && !x.is_nan() && !y.is_nan() {
                    return self.crash(CrashKind::DomainError, "math domain error (pow)");
                }
                if v.is_infinite() && x.is_finite() && y.is_finite() {
                    return self.crash(CrashKind::DomainError, "math range error (pow)");
                }
                Ok(Value::Float(v))
            }
            "abs" => match args[0] {
                Value::Int(i) => match i.checked_abs() {
                    Some(v) => Ok(Value::Int(v)),
                    None => self.crash(CrashKind::DomainError, "integer overflow"),
                },
                _ => Ok(Value::Float(num(0)?.abs())),
            },
            _ => unreachable!("unknown builtin {name}"),
        }
    }
}

/// `|a - b| <= tol`.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
