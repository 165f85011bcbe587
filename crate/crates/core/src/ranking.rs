//! Tie-aware rankings.
//!
//! Ranks use standard-competition numbering: entities with equal scores
//! share a rank, and the next group's rank skips the tied positions
//! (`1, 1, 3`). Inside a tie group entries are ordered by entity key.
//! Scores are extended reals; `+inf` sorts above every finite score.

use std::collections::BTreeSet;

use crate::entity::Entity;

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntity {
    pub entity: Entity,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ranking {
    entries: Vec<RankedEntity>,
}

/// Ranks `scores`. Panics on NaN.
pub fn rank<I>(scores: I) -> Ranking
where
    I: IntoIterator<Item = (Entity, f64)>,
{
    let mut v: Vec<(Entity, f64)> = scores
        .into_iter()
        .map(|(e, s)| {
            assert!(!s.is_nan(), "NaN score for {e}");
            // -0.0 and 0.0 must tie
            (e, s + 0.0)
        })
        .collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut entries = Vec::with_capacity(v.len());
    let mut current = 0;
    for (i, (entity, score)) in v.into_iter().enumerate() {
        if i == 0 || entries.last().map(|e: &RankedEntity| e.score) != Some(score) {
            current = i + 1;
        }
        entries.push(RankedEntity {
            entity,
            score,
            rank: current,
        });
    }
    Ranking { entries }
}

impl Ranking {
    pub fn entries(&self) -> &[RankedEntity] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, entity: &Entity) -> Option<&RankedEntity> {
        self.entries.iter().find(|e| &e.entity == entity)
    }

    /// Entities at rank 1.
    pub fn top_set(&self) -> BTreeSet<Entity> {
        self.entries
            .iter()
            .take_while(|e| e.rank == 1)
            .map(|e| e.entity.clone())
            .collect()
    }

    /// Statement lines at rank 1, for quick assertions.
    pub fn top_lines(&self) -> BTreeSet<u32> {
        self.top_set().iter().map(Entity::line).collect()
    }

    /// Number of entries strictly above `score`, and the size of its tie
    /// group.
    pub fn position_of_score(&self, score: f64) -> (usize, usize) {
        let score = score + 0.0;
        let above = self.entries.iter().filter(|e| e.score > score).count();
        let tied = self.entries.iter().filter(|e| e.score == score).count();
        (above, tied)
    }
}
