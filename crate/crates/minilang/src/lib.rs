//! A small deterministic imperative language with a tracing interpreter.
//!
//! Programs are sets of functions spread across one or more `.ml1` files.
//! Test cases are zero-argument top-level functions named `test_*`. The
//! interpreter reports line coverage, the dynamic sequence of branch
//! predicate evaluations, and a call stack for crashes, and it can force a
//! chosen predicate evaluation to the opposite outcome. [`mutate`] derives
//! single-edit variants of a program.
//!
//! ```
//! use locus_minilang::{parse, execute_test, ExecOptions, Status};
//!
//! let program = parse(
//!     "fn double(x) { return x * 2; }
//!      fn test_double() { assert double(2) == 4; }",
//! ).unwrap();
//! let run = execute_test(&program, "test_double", &ExecOptions::default()).unwrap();
//! assert_eq!(run.outcome.status, Status::Pass);
//! ```

pub mod ast;
mod error;
pub mod interp;
mod lexer;
pub mod mutate;
mod parser;
pub mod printer;
mod resolve;

pub use ast::{is_test_name, is_test_qualified, FileId, FunctionDecl, Loc, Program};
pub use error::{ExecError, ParseError};
pub use interp::{
    approx_eq, call_function, execute_test, CrashKind, ExecOptions, Flip, Frame, Outcome, PredicateInstance, RunResult,
    Runner, Status, Value, DEFAULT_STEP_BUDGET,
};
pub use mutate::{apply, mutate, mutations, Mutation, Operator, OperatorSet, Replacement};
pub use parser::parse;
pub use printer::{print_expr, print_file, print_program};
