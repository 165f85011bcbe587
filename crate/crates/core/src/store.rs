//! Per-run intermediate results on disk.
//!
//! A run directory holds one file per stage. Every ranked CSV can be
//! recomputed from the stage files alone, see [`replay`].
//!
//! | file | content |
//! |---|---|
//! | `run.json` | family, granularity and technique parameters |
//! | `model.json` | function spans and statement lines |
//! | `tests.jsonl` | one spectrum record per executed test |
//! | `mutants.jsonl`, `kills.jsonl` | MBFL only |
//! | `ps_instances.jsonl`, `ps_flips.jsonl` | PS only |
//! | `traces.jsonl` | ST only |
//! | `timing.jsonl` | wall clock per family |
//! | `scores_<technique>.csv` | final rankings |

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::entity::Granularity;
use crate::error::{Error, IoError};
use crate::io::{self, read_jsonl, write_jsonl, write_text, TraceRecord};
use crate::mbfl::KillRecord;
use crate::model::ProgramModel;
use crate::pipeline::{score_mbfl, score_ps, score_sbfl, score_st, RunConfig, RunOutput};
use crate::ps::FlipRecord;
use crate::ranking::Ranking;
use crate::technique::{Family, Technique};

pub const RUN: &str = "run.json";
pub const MODEL: &str = "model.json";
pub const TESTS: &str = "tests.jsonl";
pub const MUTANTS: &str = "mutants.jsonl";
pub const KILLS: &str = "kills.jsonl";
pub const PS_INSTANCES: &str = "ps_instances.jsonl";
pub const PS_FLIPS: &str = "ps_flips.jsonl";
pub const TRACES: &str = "traces.jsonl";
pub const TIMING: &str = "timing.jsonl";

/// Parameters a replay needs, as stored in `run.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunInfo {
    pub family: Family,
    pub granularity: Granularity,
    pub dstar_exponent: u32,
    pub ps_budget: Option<usize>,
    pub step_budget: u64,
    pub failing_list: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub family: Family,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunStore {
    dir: PathBuf,
}

impl RunStore {
    /// Creates the directory if needed.
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self, IoError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| IoError::io(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, IoError> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(IoError::io(
                &dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
            ));
        }
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, stage: &str) -> PathBuf {
        self.dir.join(stage)
    }

    /// Path of a stage that must exist.
    pub fn require(&self, stage: &str) -> Result<PathBuf, IoError> {
        let p = self.path(stage);
        if p.is_file() {
            Ok(p)
        } else {
            Err(IoError::MissingStage(stage.to_string()))
        }
    }

    fn write_json<T: Serialize>(&self, stage: &str, value: &T) -> Result<(), IoError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        write_text(&self.path(stage), &text)
    }

    fn read_json<T: serde::de::DeserializeOwned>(&self, stage: &str) -> Result<T, IoError> {
        let path = self.require(stage)?;
        let text = fs::read_to_string(&path).map_err(|e| IoError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| {
            IoError::Format(crate::error::FormatError {
                path,
                line: e.line(),
                reason: e.to_string(),
            })
        })
    }

    /// Removes the stage files and CSVs of an earlier run in this directory.
    fn clear(&self) -> Result<(), IoError> {
        let csvs: Vec<String> = Family::ALL
            .iter()
            .flat_map(|f| f.techniques())
            .map(|t| t.csv_name())
            .collect();
        let stages = [
            RUN,
            MODEL,
            TESTS,
            MUTANTS,
            KILLS,
            PS_INSTANCES,
            PS_FLIPS,
            TRACES,
            TIMING,
        ];
        for name in stages.iter().copied().chain(csvs.iter().map(String::as_str)) {
            let p = self.path(name);
            match fs::remove_file(&p) {
                Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(IoError::io(&p, e)),
                _ => {}
            }
        }
        Ok(())
    }

    /// Writes every stage of `out` plus its CSVs, replacing any earlier run.
    pub fn write_run(&self, out: &RunOutput, config: &RunConfig, model: &ProgramModel) -> Result<(), IoError> {
        self.clear()?;
        let info = RunInfo {
            family: out.family,
            granularity: out.granularity,
            dstar_exponent: config.dstar_exponent,
            ps_budget: config.ps_budget,
            step_budget: config.step_budget,
            failing_list: config.failing_list.clone(),
        };
        self.write_json(RUN, &info)?;
        self.write_json(MODEL, model)?;
        write_text(&self.path(TESTS), &io::spectrum_to_jsonl(&out.stages.tests))?;
        match out.family {
            Family::Sbfl => {}
            Family::Mbfl => {
                write_jsonl(&self.path(MUTANTS), &out.stages.mutants)?;
                write_jsonl(&self.path(KILLS), &out.stages.kills)?;
            }
            Family::Ps => {
                write_jsonl(&self.path(PS_INSTANCES), &out.stages.ps_instances)?;
                write_jsonl(&self.path(PS_FLIPS), &out.stages.ps_flips)?;
            }
            Family::St => write_jsonl(&self.path(TRACES), &out.stages.traces)?,
        }
        write_jsonl(
            &self.path(TIMING),
            &[TimingRecord {
                family: out.family,
                seconds: out.seconds,
            }],
        )?;
        for (t, r) in &out.rankings {
            io::write_ranking_csv(r, &self.path(&t.csv_name()))?;
        }
        Ok(())
    }

    pub fn info(&self) -> Result<RunInfo, IoError> {
        self.read_json(RUN)
    }

    pub fn model(&self) -> Result<ProgramModel, IoError> {
        self.read_json(MODEL)
    }

    pub fn timings(&self) -> Result<Vec<TimingRecord>, IoError> {
        read_jsonl(&self.require(TIMING)?)
    }
}

/// Rankings of `family` from the stage files in `store`, without
/// executing anything.
pub fn score_stages(
    store: &RunStore,
    family: Family,
    granularity: Granularity,
    dstar_exponent: u32,
    model: &ProgramModel,
) -> Result<Vec<(Technique, Ranking)>, Error> {
    let matrix = || io::read_spectrum(&store.require(TESTS)?);
    Ok(match family {
        Family::Sbfl => score_sbfl(&matrix()?, dstar_exponent, granularity, model)?,
        Family::Mbfl => {
            let kills: Vec<KillRecord> = io::read_kills(&store.require(KILLS)?)?;
            let m = matrix()?;
            score_mbfl(&kills, m.failing() as u32, m.passing() as u32, granularity, model)
        }
        Family::Ps => {
            let flips: Vec<FlipRecord> = read_jsonl(&store.require(PS_FLIPS)?)?;
            score_ps(&flips, granularity, model)
        }
        Family::St => {
            let traces: Vec<TraceRecord> = io::read_traces(&store.require(TRACES)?)?;
            score_st(&traces, granularity, model)?
        }
    })
}

/// Recomputes one technique's ranking of a completed run.
pub fn replay(store: &RunStore, technique: Technique) -> Result<Ranking, Error> {
    let info = store.info()?;
    if info.family != technique.family() {
        return Err(IoError::MissingStage(format!("{} stages", technique.family())).into());
    }
    let model = store.model()?;
    let rankings = score_stages(store, info.family, info.granularity, info.dstar_exponent, &model)?;
    Ok(rankings
        .into_iter()
        .find(|(t, _)| *t == technique)
        .map(|(_, r)| r)
        .expect("family produces each of its techniques"))
}
