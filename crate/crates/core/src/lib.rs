//! Fault localization over test executions.
//!
//! Seven techniques in four families rank program entities (statements or
//! functions) by suspiciousness:
//!
//! * spectrum-based: Tarantula, Ochiai, DStar ([`sbfl`])
//! * mutation-based: Metallaxis, Muse ([`mbfl`])
//! * predicate switching ([`ps`])
//! * stack trace ([`st`])
//!
//! The engines run on programs written in `locus-minilang`, or on coverage,
//! kill and trace data produced elsewhere and read through [`io`].

pub mod entity;
pub mod error;
pub mod eval;
pub mod io;
pub mod mbfl;
pub mod model;
mod par;
pub mod pipeline;
pub mod ps;
pub mod ranking;
pub mod sbfl;
pub mod spectrum;
pub mod st;
pub mod store;
mod technique;

pub use entity::{Entity, Granularity};
pub use error::{DuplicateTest, Error, FormatError, IoError, NoFailingTests, OverlappingSpans, UnknownFunction};
pub use model::{to_function_granularity, ProgramModel};
pub use ranking::{rank, RankedEntity, Ranking};
pub use spectrum::{tally, ExecutionRecord, Frame, SpectrumMatrix, StackTrace, TallyCounts, TestOutcome, TestStatus};
pub use technique::{Family, Technique, UnknownName};
