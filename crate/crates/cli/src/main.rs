//! `locus`: rank the statements or functions of a mini-language project by
//! how likely they are to contain the bug its failing tests expose.
//!
//! Exit status: 0 on success, 1 when no test fails, 2 on any other error.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use locus_core::eval::evaluate_corpus;
use locus_core::io::{ranking_csv, read_spectrum, write_ranking_csv};
use locus_core::pipeline::{crash_traces, run, score_sbfl, score_st, Project, RunConfig};
use locus_core::ps::DEFAULT_PS_BUDGET;
use locus_core::sbfl::DEFAULT_DSTAR_EXPONENT;
use locus_core::store::{score_stages, RunStore};
use locus_core::{Error, Family, Granularity, IoError, NoFailingTests, ProgramModel, Ranking, Technique};

#[derive(Debug, Parser)]
#[command(name = "locus", version, about = "Fault localization for mini-language projects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the tests under `--src` and rank entities with one family.
    Run(RunArgs),
    /// Rank again from a run store or a spectrum file, without executing.
    Score(ScoreArgs),
    /// Expected ranks and @n counts over a bug corpus.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Sbfl,
    Mbfl,
    Ps,
    St,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Sbfl => Family::Sbfl,
            FamilyArg::Mbfl => Family::Mbfl,
            FamilyArg::Ps => Family::Ps,
            FamilyArg::St => Family::St,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GranularityArg {
    Statement,
    Function,
}

impl From<GranularityArg> for Granularity {
    fn from(g: GranularityArg) -> Self {
        match g {
            GranularityArg::Statement => Granularity::Statement,
            GranularityArg::Function => Granularity::Function,
        }
    }
}

/// `all` or a positive flip count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PsBudget(Option<usize>);

impl FromStr for PsBudget {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(PsBudget(None));
        }
        match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("expected `all` or a positive integer, got `{s}`")),
            Ok(n) => Ok(PsBudget(Some(n))),
        }
    }
}

impl fmt::Display for PsBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(n) => write!(f, "{n}"),
            None => f.write_str("all"),
        }
    }
}

#[derive(Debug, Args)]
struct Execution {
    /// Flips tried per failing test by predicate switching, or `all`.
    #[arg(long, default_value_t = PsBudget(Some(DEFAULT_PS_BUDGET)))]
    ps_budget: PsBudget,
    /// Interpreter steps per test run; exhausting it fails the test.
    #[arg(long, default_value_t = RunConfig::default().step_budget, value_parser = clap::value_parser!(u64).range(1..))]
    step_budget: u64,
    /// Worker threads for mutant and flip executions.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Project directory (or single file) of `.ml1` sources.
    #[arg(long)]
    src: PathBuf,
    #[arg(long, value_enum, default_value_t = FamilyArg::Sbfl)]
    family: FamilyArg,
    #[arg(long, value_enum, default_value_t = GranularityArg::Statement)]
    granularity: GranularityArg,
    /// Failing tests to localize: comma-separated ids, or a file of ids.
    #[arg(long)]
    failing_list: Option<String>,
    /// Run store directory for stage files and CSVs.
    #[arg(long, default_value = "locus-out")]
    output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DSTAR_EXPONENT, value_parser = clap::value_parser!(u32).range(1..))]
    dstar_exponent: u32,
    #[command(flatten)]
    execution: Execution,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// A run store directory, or a spectrum file in JSON Lines.
    #[arg(long)]
    from: PathBuf,
    /// Sources for function spans; needed for spectrum files at function
    /// granularity or for stack traces.
    #[arg(long)]
    src: Option<PathBuf>,
    /// Defaults to the store's family, or sbfl for a spectrum file.
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    /// Defaults to the store's granularity, or statement.
    #[arg(long, value_enum)]
    granularity: Option<GranularityArg>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    dstar_exponent: Option<u32>,
    /// Directory for the CSVs; printed to stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Corpus manifest (JSON).
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 5)]
    at_n: usize,
    /// Families to evaluate, comma-separated; all by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    family: Vec<FamilyArg>,
    #[arg(long, value_enum, default_value_t = GranularityArg::Statement)]
    granularity: GranularityArg,
    #[arg(long, default_value_t = DEFAULT_DSTAR_EXPONENT, value_parser = clap::value_parser!(u32).range(1..))]
    dstar_exponent: u32,
    #[command(flatten)]
    execution: Execution,
    /// Directory for `eval.csv`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::NoFailingTests(_)) => 1,
            _ => 2,
        }
    }
}

fn failing_list(arg: &str) -> Result<Vec<String>, CliError> {
    let path = Path::new(arg);
    let text = if path.is_file() {
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
    } else {
        arg.to_string()
    };
    let ids: Vec<String> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    if ids.is_empty() {
        return Err(CliError::Usage("--failing-list names no tests".into()));
    }
    Ok(ids)
}

fn load(src: &Path) -> Result<Project, CliError> {
    if !src.exists() {
        return Err(CliError::Usage(format!("{}: no such file or directory", src.display())));
    }
    let base = if src.is_dir() {
        src
    } else {
        src.parent().unwrap_or(Path::new(""))
    };
    Project::load_dir(src).map_err(|e| match e {
        // parse errors name files relative to `src`
        Error::Parse(errs) => Error::Parse(
            errs.into_iter()
                .map(|mut p| {
                    p.file = base.join(&p.file).display().to_string();
                    p
                })
                .collect(),
        )
        .into(),
        other => other.into(),
    })
}

fn summary(t: Technique, r: &Ranking) -> String {
    let top: Vec<String> = r.top_set().iter().map(ToString::to_string).collect();
    if top.is_empty() {
        format!("{t}: no entity ranked")
    } else {
        format!("{t}: {} ranked, top: {}", r.len(), top.join(" "))
    }
}

fn cmd_run(a: RunArgs) -> Result<(), CliError> {
    let project = load(&a.src)?;
    let config = RunConfig {
        family: a.family.into(),
        granularity: a.granularity.into(),
        failing_list: a.failing_list.as_deref().map(failing_list).transpose()?,
        dstar_exponent: a.dstar_exponent,
        ps_budget: a.execution.ps_budget.0,
        step_budget: a.execution.step_budget,
        jobs: a.execution.jobs as usize,
        ..RunConfig::default()
    };
    let out = run(&project, &config)?;
    let store = RunStore::create(&a.output)?;
    store.write_run(&out, &config, &project.model)?;
    for (t, r) in &out.rankings {
        println!("{}", summary(*t, r));
        println!("  {}", store.path(&t.csv_name()).display());
    }
    println!("{} family: {:.6}s", out.family, out.seconds);
    Ok(())
}

fn emit(rankings: &[(Technique, Ranking)], output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(dir) => {
            let store = RunStore::create(dir)?;
            for (t, r) in rankings {
                let path = store.path(&t.csv_name());
                write_ranking_csv(r, &path)?;
                println!("{}", summary(*t, r));
                println!("  {}", path.display());
            }
        }
        None => {
            for (t, r) in rankings {
                println!("# {t}");
                print!("{}", ranking_csv(r));
            }
        }
    }
    Ok(())
}

fn cmd_score(a: ScoreArgs) -> Result<(), CliError> {
    let project = a.src.as_deref().map(load).transpose()?;
    let rankings = if a.from.is_dir() {
        let store = RunStore::open(&a.from)?;
        let info = store.info()?;
        let model = match &project {
            Some(p) => p.model.clone(),
            None => store.model()?,
        };
        score_stages(
            &store,
            a.family.map_or(info.family, Family::from),
            a.granularity.map_or(info.granularity, Granularity::from),
            a.dstar_exponent.unwrap_or(info.dstar_exponent),
            &model,
        )?
    } else {
        let family = a.family.map_or(Family::Sbfl, Family::from);
        let granularity = a.granularity.map_or(Granularity::Statement, Granularity::from);
        let matrix = read_spectrum(&a.from)?;
        if matrix.failing() == 0 {
            return Err(Error::from(NoFailingTests).into());
        }
        let needs_src = family == Family::St || granularity == Granularity::Function;
        let model = match (&project, needs_src) {
            (Some(p), _) => p.model.clone(),
            (None, false) => ProgramModel::default(),
            (None, true) => {
                return Err(CliError::Usage(format!(
                    "scoring {family} at {} granularity from a spectrum file needs --src",
                    granularity.as_str()
                )))
            }
        };
        match family {
            Family::Sbfl => score_sbfl(
                &matrix,
                a.dstar_exponent.unwrap_or(DEFAULT_DSTAR_EXPONENT),
                granularity,
                &model,
            )?,
            Family::St => score_st(&crash_traces(&matrix), granularity, &model)?,
            Family::Mbfl | Family::Ps => {
                return Err(CliError::Usage(format!(
                    "{family} scores need the stage files of a run store, not a spectrum file"
                )))
            }
        }
    };
    emit(&rankings, a.output.as_deref())
}

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let families: Vec<Family> = if a.family.is_empty() {
        Family::ALL.to_vec()
    } else {
        a.family.iter().map(|f| Family::from(*f)).collect()
    };
    let config = RunConfig {
        granularity: a.granularity.into(),
        dstar_exponent: a.dstar_exponent,
        ps_budget: a.execution.ps_budget.0,
        step_budget: a.execution.step_budget,
        jobs: a.execution.jobs as usize,
        ..RunConfig::default()
    };
    let report = evaluate_corpus(&a.corpus, &families, &config, a.at_n)?;
    print!("{}", report.table());
    if let Some(dir) = &a.output {
        let store = RunStore::create(dir)?;
        let path = store.path("eval.csv");
        std::fs::write(&path, report.csv()).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Score(a) => cmd_score(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("locus: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
