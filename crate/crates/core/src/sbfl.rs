//! Spectrum-based suspiciousness: Tarantula, Ochiai and DStar.
//!
//! All three are computed from one tally pass. A formula's degenerate
//! cases are defined so that it is total: an entity no failing test covers
//! scores 0 everywhere, Tarantula treats `ep/P` as 0 when `P = 0`, and
//! DStar is `+inf` when `ep + nf = 0` with `ef > 0`.

use std::collections::BTreeMap;

use crate::entity::Entity;
use crate::error::NoFailingTests;
use crate::ranking::{rank, Ranking};
use crate::spectrum::{tally, SpectrumMatrix, TallyCounts};

pub const DEFAULT_DSTAR_EXPONENT: u32 = 2;

pub fn tarantula(t: &TallyCounts) -> f64 {
    if t.ef == 0 {
        return 0.0;
    }
    let fail = t.ef as f64 / t.f() as f64;
    let pass = if t.p() == 0 { 0.0 } else { t.ep as f64 / t.p() as f64 };
    fail / (fail + pass)
}

pub fn ochiai(t: &TallyCounts) -> f64 {
    if t.ef == 0 {
        return 0.0;
    }
    t.ef as f64 / (t.f() as f64 * (t.ef + t.ep) as f64).sqrt()
}

pub fn dstar(t: &TallyCounts, star: u32) -> f64 {
    if t.ef == 0 {
        return 0.0;
    }
    let denom = t.ep + t.nf;
    if denom == 0 {
        return f64::INFINITY;
    }
    (t.ef as f64).powi(star as i32) / denom as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbflScoreTriple {
    pub tarantula: f64,
    pub ochiai: f64,
    pub dstar: f64,
}

impl SbflScoreTriple {
    pub fn of(t: &TallyCounts, star: u32) -> Self {
        Self {
            tarantula: tarantula(t),
            ochiai: ochiai(t),
            dstar: dstar(t, star),
        }
    }
}

/// Score triples for every covered entity.
pub fn sbfl_scores(matrix: &SpectrumMatrix, star: u32) -> Result<BTreeMap<Entity, SbflScoreTriple>, NoFailingTests> {
    Ok(tally(matrix)?
        .into_iter()
        .map(|(e, t)| (e, SbflScoreTriple::of(&t, star)))
        .collect())
}

/// Splits triples into one score map per formula.
pub fn split_scores(triples: &BTreeMap<Entity, SbflScoreTriple>) -> [BTreeMap<Entity, f64>; 3] {
    let pick = |f: fn(&SbflScoreTriple) -> f64| triples.iter().map(|(e, t)| (e.clone(), f(t))).collect();
    [pick(|t| t.tarantula), pick(|t| t.ochiai), pick(|t| t.dstar)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SbflRankings {
    pub tarantula: Ranking,
    pub ochiai: Ranking,
    pub dstar: Ranking,
}

pub fn sbfl_localize(matrix: &SpectrumMatrix, star: u32) -> Result<SbflRankings, NoFailingTests> {
    let [t, o, d] = split_scores(&sbfl_scores(matrix, star)?);
    Ok(SbflRankings {
        tarantula: rank(t),
        ochiai: rank(o),
        dstar: rank(d),
    })
}
