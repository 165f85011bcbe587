//! Stack-trace suspiciousness.
//!
//! The frame at depth `d` (innermost = 0) of a crashing test's trace gives
//! its function `1/(d+1)`; a function keeps its best contribution over all
//! traces. Frames of test code are skipped and do not consume a depth. At
//! statement granularity every statement a function owns inherits its
//! score.

use std::collections::BTreeMap;

use locus_minilang::is_test_qualified;

use crate::entity::Entity;
use crate::error::UnknownFunction;
use crate::model::ProgramModel;
use crate::spectrum::StackTrace;

/// Function scores from `(test id, trace)` pairs of crashing tests.
pub fn st_function_scores(
    crashing: &[(String, StackTrace)],
    model: &ProgramModel,
) -> Result<BTreeMap<Entity, f64>, UnknownFunction> {
    let mut out: BTreeMap<Entity, f64> = BTreeMap::new();
    for (_, trace) in crashing {
        let target = trace.frames.iter().filter(|f| !is_test_qualified(&f.function));
        for (depth, frame) in target.enumerate() {
            let function = model
                .function_named(&frame.file, &frame.function)
                .ok_or_else(|| UnknownFunction {
                    function: frame.function.clone(),
                    file: frame.file.clone(),
                })?;
            let s = 1.0 / (depth as f64 + 1.0);
            out.entry(function.clone()).and_modify(|v| *v = v.max(s)).or_insert(s);
        }
    }
    Ok(out)
}

/// Spreads function scores over the statements each function owns.
pub fn st_statement_scores(functions: &BTreeMap<Entity, f64>, model: &ProgramModel) -> BTreeMap<Entity, f64> {
    functions
        .iter()
        .flat_map(|(f, s)| model.statements_of(f).into_iter().map(move |st| (st, *s)))
        .collect()
}
