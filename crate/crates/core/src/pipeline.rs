//! End-to-end localization of a mini-language project.
//!
//! A project is every `.ml1` file under a source directory. Tests are the
//! zero-argument `test_*` functions, run in lexicographic order. One call
//! to [`run`] executes a whole family and yields one ranking per
//! technique, plus the stage data a [`RunStore`](crate::store::RunStore)
//! persists. The `score_*` functions turn stage data into rankings and are
//! shared with replay.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use locus_minilang::{is_test_name, ExecOptions, OperatorSet, Program, Runner, DEFAULT_STEP_BUDGET};

use crate::entity::{Entity, Granularity};
use crate::error::{DuplicateTest, Error, IoError};
use crate::io::{StoredRecord, TraceRecord};
use crate::mbfl::{build_kill_matrix, generate_mutants, metallaxis, muse, KillRecord, Mutant};
use crate::model::{to_function_granularity, ProgramModel};
use crate::ps::{critical_from_flips, ps_scores, ps_search, FlipRecord, InstanceRecord, PsOptions, DEFAULT_PS_BUDGET};
use crate::ranking::{rank, Ranking};
use crate::sbfl::{sbfl_scores, split_scores, DEFAULT_DSTAR_EXPONENT};
use crate::spectrum::{ExecutionRecord, SpectrumMatrix, TestOutcome, TestStatus};
use crate::st::{st_function_scores, st_statement_scores};
use crate::technique::{Family, Technique};

/// A parsed and linked program with its discovered tests.
#[derive(Debug, Clone)]
pub struct Project {
    pub program: Program,
    pub model: ProgramModel,
    /// Lexicographic.
    pub tests: Vec<String>,
}

/// Test function names, sorted; duplicates across or within files are an
/// error.
pub fn discover_tests(program: &Program) -> Result<Vec<String>, DuplicateTest> {
    let mut seen = BTreeSet::new();
    for f in program.functions.iter().filter(|f| is_test_name(&f.name)) {
        if !seen.insert(f.name.clone()) {
            return Err(DuplicateTest(f.name.clone()));
        }
    }
    Ok(program
        .test_names()
        .into_iter()
        .map(str::to_string)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect())
}

/// `.ml1` files under `src` (or `src` itself), keyed by their
/// `/`-separated relative path.
pub fn source_files(src: &Path) -> Result<Vec<(String, PathBuf)>, Error> {
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(src).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(src).to_path_buf();
            IoError::io(path, e.into())
        })?;
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().is_none_or(|x| x != "ml1") {
            continue;
        }
        // a single-file `src` is named by its file name
        let rel = match path.strip_prefix(src) {
            Ok(r) if !r.as_os_str().is_empty() => r,
            _ => Path::new(path.file_name().unwrap_or_default()),
        };
        let name = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        files.push((name, path.to_path_buf()));
    }
    files.sort();
    Ok(files)
}

impl Project {
    /// Parses `(name, text)` pairs as one program.
    pub fn from_sources(sources: &[(String, String)]) -> Result<Self, Error> {
        let program = Program::parse_unlinked(sources).map_err(Error::Parse)?;
        let tests = discover_tests(&program)?;
        program.link().map_err(Error::Parse)?;
        let model = ProgramModel::from_program(&program)?;
        Ok(Self { program, model, tests })
    }

    /// Loads named files; names become the entity file keys.
    pub fn from_files(files: &[(String, PathBuf)]) -> Result<Self, Error> {
        let mut sources = Vec::with_capacity(files.len());
        for (name, path) in files {
            let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
            sources.push((name.clone(), text));
        }
        Self::from_sources(&sources)
    }

    pub fn load_dir(src: &Path) -> Result<Self, Error> {
        Self::from_files(&source_files(src)?)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub family: Family,
    pub granularity: Granularity,
    pub failing_list: Option<Vec<String>>,
    pub dstar_exponent: u32,
    /// Flips per failing test; `None` is unlimited.
    pub ps_budget: Option<usize>,
    pub step_budget: u64,
    pub jobs: usize,
    pub operators: OperatorSet,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: Family::Sbfl,
            granularity: Granularity::Statement,
            failing_list: None,
            dstar_exponent: DEFAULT_DSTAR_EXPONENT,
            ps_budget: Some(DEFAULT_PS_BUDGET),
            step_budget: DEFAULT_STEP_BUDGET,
            jobs: 1,
            operators: OperatorSet::default(),
        }
    }
}

/// Stage data of one run, as written to a run store.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stages {
    pub tests: Vec<StoredRecord>,
    pub mutants: Vec<Mutant>,
    pub kills: Vec<KillRecord>,
    pub ps_instances: Vec<InstanceRecord>,
    pub ps_flips: Vec<FlipRecord>,
    pub traces: Vec<TraceRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub family: Family,
    pub granularity: Granularity,
    pub rankings: Vec<(Technique, Ranking)>,
    /// Wall clock of test execution and scoring.
    pub seconds: f64,
    pub stages: Stages,
}

impl RunOutput {
    pub fn ranking(&self, t: Technique) -> Option<&Ranking> {
        self.rankings.iter().find(|(x, _)| *x == t).map(|(_, r)| r)
    }
}

/// Tests to execute. A failing list must name discovered tests; for ST and
/// PS it is also the execution set.
pub fn execution_set(config: &RunConfig, discovered: &[String]) -> Result<Vec<String>, Error> {
    let Some(list) = &config.failing_list else {
        return Ok(discovered.to_vec());
    };
    for t in list {
        if !discovered.contains(t) {
            return Err(Error::UnknownTest(t.clone()));
        }
    }
    Ok(match config.family {
        Family::St | Family::Ps => list.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect(),
        Family::Sbfl | Family::Mbfl => discovered.to_vec(),
    })
}

fn execute(
    project: &Project,
    tests: &[String],
    trace: bool,
    config: &RunConfig,
) -> Result<Vec<ExecutionRecord>, Error> {
    let runner = Runner::new(&project.program);
    let opts = ExecOptions {
        flip: None,
        step_budget: config.step_budget,
        trace,
    };
    let runs = crate::par::map(config.jobs, tests, |t| runner.run_test(t, &opts));
    let mut out = Vec::with_capacity(tests.len());
    for (test, run) in tests.iter().zip(runs) {
        let run = run?;
        let covered = run
            .covered
            .iter()
            .map(|l| (project.program.file_name(l.file), l.line))
            .filter(|(f, l)| project.model.is_statement(f, *l))
            .map(|(f, l)| Entity::statement(f, l))
            .collect();
        out.push(ExecutionRecord {
            test_id: test.clone(),
            outcome: TestOutcome::from_run(&project.program, &run.outcome),
            covered,
        });
    }
    Ok(out)
}

/// Marks records outside the analysis. With a failing list, listed tests
/// must fail, and unlisted failing tests are excluded.
fn select(records: Vec<ExecutionRecord>, config: &RunConfig) -> Result<Vec<StoredRecord>, Error> {
    let listed: Option<BTreeSet<&String>> = config.failing_list.as_ref().map(|l| l.iter().collect());
    let mut out = Vec::with_capacity(records.len());
    for record in records {
        let excluded = match &listed {
            None => false,
            Some(l) if l.contains(&record.test_id) => {
                if !record.outcome.is_failing() {
                    return Err(Error::NotActuallyFailing(record.test_id));
                }
                false
            }
            Some(_) => record.outcome.is_failing(),
        };
        out.push(StoredRecord { record, excluded });
    }
    Ok(out)
}

fn analysed(stored: &[StoredRecord]) -> Result<SpectrumMatrix, Error> {
    Ok(SpectrumMatrix::new(
        stored
            .iter()
            .filter(|r| !r.excluded)
            .map(|r| r.record.clone())
            .collect(),
    )?)
}

/// Runs one family end to end.
pub fn run(project: &Project, config: &RunConfig) -> Result<RunOutput, Error> {
    let started = Instant::now();
    let tests = execution_set(config, &project.tests)?;
    let trace = matches!(config.family, Family::Sbfl | Family::Mbfl);
    let stored = select(execute(project, &tests, trace, config)?, config)?;
    let matrix = analysed(&stored)?;
    let failing: Vec<String> = matrix
        .records()
        .iter()
        .filter(|r| r.outcome.is_failing())
        .map(|r| r.test_id.clone())
        .collect();
    if failing.is_empty() {
        return Err(crate::error::NoFailingTests.into());
    }
    let model = &project.model;
    let g = config.granularity;
    let mut stages = Stages::default();
    let rankings = match config.family {
        Family::Sbfl => score_sbfl(&matrix, config.dstar_exponent, g, model)?,
        Family::Mbfl => {
            let failing_covered: BTreeSet<Entity> = matrix
                .records()
                .iter()
                .filter(|r| r.outcome.is_failing())
                .flat_map(|r| r.covered.iter().cloned())
                .collect();
            let generated = generate_mutants(&project.program, &failing_covered, &config.operators);
            let baseline: BTreeMap<String, TestStatus> = matrix
                .records()
                .iter()
                .map(|r| (r.test_id.clone(), r.outcome.status))
                .collect();
            let kills = build_kill_matrix(&project.program, &generated, &baseline, config.step_budget, config.jobs);
            let (f, p) = (matrix.failing() as u32, matrix.passing() as u32);
            let rankings = score_mbfl(&kills, f, p, g, model);
            stages.mutants = generated.into_iter().map(|(m, _)| m).collect();
            stages.kills = kills;
            rankings
        }
        Family::Ps => {
            let opts = PsOptions {
                budget: config.ps_budget,
                step_budget: config.step_budget,
                jobs: config.jobs,
            };
            let search = ps_search(&project.program, model, &failing, &opts)?;
            let rankings = score_ps(&search.flips, g, model);
            stages.ps_instances = search.instances;
            stages.ps_flips = search.flips;
            rankings
        }
        Family::St => {
            let traces = crash_traces(&matrix);
            let rankings = score_st(&traces, g, model)?;
            stages.traces = traces;
            rankings
        }
    };
    let seconds = started.elapsed().as_secs_f64();
    stages.tests = stored;
    Ok(RunOutput {
        family: config.family,
        granularity: g,
        rankings,
        seconds,
        stages,
    })
}

/// Traces of the crashing tests in `matrix`.
pub fn crash_traces(matrix: &SpectrumMatrix) -> Vec<TraceRecord> {
    matrix
        .records()
        .iter()
        .filter_map(|r| {
            let t = r.outcome.stack_trace.as_ref()?;
            Some(TraceRecord {
                test_id: r.test_id.clone(),
                frames: t.frames.clone(),
            })
        })
        .collect()
}

fn lift_all(scores: BTreeMap<Entity, f64>, g: Granularity, model: &ProgramModel) -> Result<Ranking, Error> {
    Ok(match g {
        Granularity::Statement => rank(scores),
        Granularity::Function => rank(to_function_granularity(&scores, model.functions())?),
    })
}

fn lift_scored(scores: BTreeMap<Entity, f64>, g: Granularity, model: &ProgramModel) -> Ranking {
    match g {
        Granularity::Statement => rank(scores),
        Granularity::Function => rank(model.lift_scored(&scores)),
    }
}

/// Tarantula, Ochiai and DStar rankings. At function granularity every
/// function of the model appears, unscored ones at 0.
pub fn score_sbfl(
    matrix: &SpectrumMatrix,
    star: u32,
    g: Granularity,
    model: &ProgramModel,
) -> Result<Vec<(Technique, Ranking)>, Error> {
    let [t, o, d] = split_scores(&sbfl_scores(matrix, star)?);
    Ok(vec![
        (Technique::Tarantula, lift_all(t, g, model)?),
        (Technique::Ochiai, lift_all(o, g, model)?),
        (Technique::Dstar, lift_all(d, g, model)?),
    ])
}

/// Metallaxis and Muse rankings over mutated locations only.
pub fn score_mbfl(
    kills: &[KillRecord],
    f: u32,
    p: u32,
    g: Granularity,
    model: &ProgramModel,
) -> Vec<(Technique, Ranking)> {
    vec![
        (Technique::Metallaxis, lift_scored(metallaxis(kills, f, p), g, model)),
        (Technique::Muse, lift_scored(muse(kills, f, p), g, model)),
    ]
}

/// Critical predicates only.
pub fn score_ps(flips: &[FlipRecord], g: Granularity, model: &ProgramModel) -> Vec<(Technique, Ranking)> {
    vec![(
        Technique::Ps,
        lift_scored(ps_scores(&critical_from_flips(flips)), g, model),
    )]
}

/// Functions on some crash trace, or their statements.
pub fn score_st(
    traces: &[TraceRecord],
    g: Granularity,
    model: &ProgramModel,
) -> Result<Vec<(Technique, Ranking)>, Error> {
    let crashing: Vec<(String, crate::spectrum::StackTrace)> = traces
        .iter()
        .map(|t| {
            (
                t.test_id.clone(),
                crate::spectrum::StackTrace {
                    frames: t.frames.clone(),
                },
            )
        })
        .collect();
    let functions = st_function_scores(&crashing, model)?;
    let ranking = match g {
        Granularity::Statement => rank(st_statement_scores(&functions, model)),
        Granularity::Function => rank(functions),
    };
    Ok(vec![(Technique::St, ranking)])
}
