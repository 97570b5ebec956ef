//! Seed-set curation when no prior annotations exist: draw random items, drop
//! unsuitable ones, place the rest as points, then average the placements
//! into the first anchor pool.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anchors::{AnchorError, AnchorPool};
use crate::model::{AnchorOrigin, AnnotatorId, ExampleAnchor, Item, ItemId, ModelError, ScalePos, SemanticAnchor};

pub const DEFAULT_MIN_SEED_COUNT: usize = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ColdStartError {
    #[error("item {0} not found")]
    NotFound(ItemId),
    #[error("draw size must be at least 1")]
    EmptyDraw,
    #[error("placement out of range: {0}")]
    Range(#[from] ModelError),
    #[error("seed set incomplete: {0}")]
    Incomplete(String),
    #[error("item {0} is not a seed anchor")]
    NotSeed(ItemId),
    #[error(transparent)]
    Anchor(#[from] AnchorError),
}

/// What a draw returned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawOutcome {
    pub drawn: Vec<ItemId>,
    /// Fewer than requested were available.
    pub exhausted: bool,
}

/// Working state of the seed set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedDraft {
    dataset: Vec<ItemId>,
    candidates: Vec<ItemId>,
    undrawn: Vec<ItemId>,
    placements: BTreeMap<ItemId, BTreeMap<AnnotatorId, ScalePos>>,
    semantic: Vec<SemanticAnchor>,
}

impl SeedDraft {
    pub fn new(items: &[Item], semantic: Vec<SemanticAnchor>) -> Self {
        let dataset: Vec<ItemId> = items.iter().map(|i| i.id.clone()).collect();
        SeedDraft { undrawn: dataset.clone(), dataset, candidates: Vec::new(), placements: BTreeMap::new(), semantic }
    }

    pub fn candidates(&self) -> &[ItemId] {
        &self.candidates
    }

    pub fn undrawn(&self) -> &[ItemId] {
        &self.undrawn
    }

    pub fn placements(&self) -> &BTreeMap<ItemId, BTreeMap<AnnotatorId, ScalePos>> {
        &self.placements
    }

    pub fn placement_count(&self) -> usize {
        self.placements.values().map(BTreeMap::len).sum()
    }

    /// Draws up to `n` undrawn items uniformly without replacement.
    pub fn draw(&mut self, n: usize, rng_seed: u64) -> Result<DrawOutcome, ColdStartError> {
        if n == 0 {
            return Err(ColdStartError::EmptyDraw);
        }
        let take = n.min(self.undrawn.len());
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut picked = sample(&mut rng, self.undrawn.len(), take).into_vec();
        let drawn: Vec<ItemId> = picked.iter().map(|&i| self.undrawn[i].clone()).collect();
        picked.sort_unstable_by(|a, b| b.cmp(a));
        for i in picked {
            self.undrawn.remove(i);
        }
        self.candidates.extend(drawn.iter().cloned());
        Ok(DrawOutcome { drawn, exhausted: take < n })
    }

    /// Removes a candidate and its placements; it becomes drawable again.
    pub fn drop_candidate(&mut self, id: &ItemId) -> Result<(), ColdStartError> {
        let idx = self.candidates.iter().position(|c| c == id).ok_or_else(|| ColdStartError::NotFound(id.clone()))?;
        let item = self.candidates.remove(idx);
        self.placements.remove(&item);
        // keep the undrawn list in dataset order so draws stay reproducible
        let rank = |x: &ItemId| self.dataset.iter().position(|d| d == x).unwrap_or(usize::MAX);
        let at = self.undrawn.partition_point(|u| rank(u) < rank(&item));
        self.undrawn.insert(at, item);
        Ok(())
    }

    /// Records or overwrites an annotator's placement of a candidate.
    pub fn place(&mut self, annotator: &AnnotatorId, id: &ItemId, pos: f64) -> Result<(), ColdStartError> {
        if !self.candidates.contains(id) {
            return Err(ColdStartError::NotFound(id.clone()));
        }
        let pos = ScalePos::new(pos)?;
        self.placements.entry(id.clone()).or_default().insert(annotator.clone(), pos);
        Ok(())
    }

    /// Averages each candidate's placements into a point seed anchor.
    pub fn finalize(&self, min_count: usize) -> Result<AnchorPool, ColdStartError> {
        if self.candidates.len() < min_count {
            return Err(ColdStartError::Incomplete(format!(
                "{} candidates, at least {min_count} required",
                self.candidates.len()
            )));
        }
        let mut anchors = Vec::with_capacity(self.candidates.len());
        for id in &self.candidates {
            let ps = self
                .placements
                .get(id)
                .filter(|m| !m.is_empty())
                .ok_or_else(|| ColdStartError::Incomplete(format!("item {id} has no placement")))?;
            let mean = ps.values().map(|p| p.get()).sum::<f64>() / ps.len() as f64;
            anchors.push(ExampleAnchor::seed(id.clone(), ScalePos::clamped(mean)));
        }
        Ok(AnchorPool::new(anchors, self.semantic.clone())?)
    }
}

/// Takes a seed anchor off the scale so the item can be annotated afresh.
pub fn reintroduce(pool: &mut AnchorPool, items: &[Item], id: &ItemId) -> Result<Item, ColdStartError> {
    match pool.get(id) {
        Some(a) if a.origin == AnchorOrigin::Seed => {}
        Some(_) => return Err(ColdStartError::NotSeed(id.clone())),
        None => return Err(ColdStartError::NotFound(id.clone())),
    }
    let item = items.iter().find(|i| &i.id == id).cloned().ok_or_else(|| ColdStartError::NotFound(id.clone()))?;
    pool.remove(id)?;
    Ok(item)
}
