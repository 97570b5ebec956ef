//! Anchor selection for the scale: global grounding anchors, local neighbours
//! of the slider handle, and the bound-dependent display position of each
//! anchor.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_semantic, ExampleAnchor, ItemId, ModelError, ScalePos, SemanticAnchor};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnchorError {
    #[error("anchor pool is empty")]
    NoAnchors,
    #[error("duplicate anchor item {0}")]
    Duplicate(ItemId),
    #[error("no anchor for item {0}")]
    NotFound(ItemId),
    #[error("minimum distance must lie in (0, 1], got {0}")]
    BadDistance(f64),
    #[error("invalid target count range {0}..={1}")]
    BadTarget(usize, usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which bound the annotator is currently placing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStep {
    LowerBound,
    UpperBound,
}

/// Where an anchor is drawn during `step`: its upper bound while the lower
/// bound is being placed and vice versa.
pub fn anchor_display_position(anchor: &ExampleAnchor, step: BoundStep) -> ScalePos {
    match step {
        BoundStep::LowerBound => anchor.upper(),
        BoundStep::UpperBound => anchor.lower(),
    }
}

/// Example anchors plus the ordered semantic labels backing one scale.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnchorPool {
    anchors: Vec<ExampleAnchor>,
    semantic: Vec<SemanticAnchor>,
}

impl AnchorPool {
    pub fn new(anchors: Vec<ExampleAnchor>, semantic: Vec<SemanticAnchor>) -> Result<Self, AnchorError> {
        validate_semantic(&semantic)?;
        let mut seen = BTreeSet::new();
        for a in &anchors {
            if !seen.insert(a.item_id.clone()) {
                return Err(AnchorError::Duplicate(a.item_id.clone()));
            }
        }
        Ok(AnchorPool { anchors, semantic })
    }

    pub fn anchors(&self) -> &[ExampleAnchor] {
        &self.anchors
    }

    pub fn semantic(&self) -> &[SemanticAnchor] {
        &self.semantic
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn get(&self, id: &ItemId) -> Option<&ExampleAnchor> {
        self.anchors.iter().find(|a| &a.item_id == id)
    }

    pub fn contains(&self, id: &ItemId) -> bool {
        self.get(id).is_some()
    }

    pub fn insert(&mut self, anchor: ExampleAnchor) -> Result<(), AnchorError> {
        if self.contains(&anchor.item_id) {
            return Err(AnchorError::Duplicate(anchor.item_id));
        }
        self.anchors.push(anchor);
        Ok(())
    }

    /// Inserts `anchor`, replacing any anchor for the same item.
    pub fn upsert(&mut self, anchor: ExampleAnchor) {
        match self.anchors.iter_mut().find(|a| a.item_id == anchor.item_id) {
            Some(slot) => *slot = anchor,
            None => self.anchors.push(anchor),
        }
    }

    pub fn remove(&mut self, id: &ItemId) -> Result<ExampleAnchor, AnchorError> {
        let idx =
            self.anchors.iter().position(|a| &a.item_id == id).ok_or_else(|| AnchorError::NotFound(id.clone()))?;
        Ok(self.anchors.remove(idx))
    }

    pub fn without(&self, id: &ItemId) -> AnchorPool {
        AnchorPool {
            anchors: self.anchors.iter().filter(|a| &a.item_id != id).cloned().collect(),
            semantic: self.semantic.clone(),
        }
    }

    pub fn with_semantic(mut self, semantic: Vec<SemanticAnchor>) -> Result<Self, AnchorError> {
        validate_semantic(&semantic)?;
        self.semantic = semantic;
        Ok(self)
    }

    /// Anchors ordered by display position for `step`, ties by item id.
    pub fn sorted_for(&self, step: BoundStep) -> Vec<(&ExampleAnchor, ScalePos)> {
        let mut v: Vec<_> = self.anchors.iter().map(|a| (a, anchor_display_position(a, step))).collect();
        v.sort_by(by_position);
        v
    }
}

fn by_position(x: &(&ExampleAnchor, ScalePos), y: &(&ExampleAnchor, ScalePos)) -> Ordering {
    x.1.get().total_cmp(&y.1.get()).then_with(|| x.0.item_id.cmp(&y.0.item_id))
}

/// How far apart consecutive global anchors must be.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum SpacingRule {
    /// A single greedy pass at exactly this distance.
    Fixed { min_distance: f64 },
    /// Start at `start`; while too few anchors are chosen and the pool has
    /// more to offer, halve the distance, never going below `floor`.
    Adaptive { start: f64, floor: f64 },
}

impl SpacingRule {
    pub fn fixed(min_distance: f64) -> Self {
        SpacingRule::Fixed { min_distance }
    }

    /// Starts at `1 / (target_upper + 1)` with a floor of 0.01.
    pub fn adaptive_for(target: &RangeInclusive<usize>) -> Self {
        SpacingRule::Adaptive { start: 1.0 / (*target.end() as f64 + 1.0), floor: 0.01 }
    }
}

/// Parameters for [`select_global_anchors`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    pub spacing: SpacingRule,
    pub target_min: usize,
    pub target_max: usize,
}

impl Default for SelectionParams {
    fn default() -> Self {
        let target = 5..=7;
        SelectionParams { spacing: SpacingRule::adaptive_for(&target), target_min: 5, target_max: 7 }
    }
}

impl SelectionParams {
    pub fn fixed(min_distance: f64, target: RangeInclusive<usize>) -> Self {
        SelectionParams {
            spacing: SpacingRule::fixed(min_distance),
            target_min: *target.start(),
            target_max: *target.end(),
        }
    }

    fn check(&self) -> Result<(), AnchorError> {
        let bad = |d: f64| !(d > 0.0 && d <= 1.0);
        match self.spacing {
            SpacingRule::Fixed { min_distance } if bad(min_distance) => {
                return Err(AnchorError::BadDistance(min_distance))
            }
            SpacingRule::Adaptive { start, floor } if bad(start) || bad(floor) || floor > start => {
                return Err(AnchorError::BadDistance(floor))
            }
            _ => {}
        }
        if self.target_max == 0 || self.target_min > self.target_max {
            return Err(AnchorError::BadTarget(self.target_min, self.target_max));
        }
        Ok(())
    }
}

/// Result of global anchor selection.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSelection<'a> {
    /// Ascending by display position.
    pub anchors: Vec<(&'a ExampleAnchor, ScalePos)>,
    /// The spacing the final pass used.
    pub min_distance: f64,
}

impl GlobalSelection<'_> {
    pub fn item_ids(&self) -> Vec<&ItemId> {
        self.anchors.iter().map(|(a, _)| &a.item_id).collect()
    }
}

/// Greedy ascending pass: keep an anchor when it sits at least `min_distance`
/// above the last kept one.
fn greedy_spaced<'a>(
    sorted: &[(&'a ExampleAnchor, ScalePos)],
    min_distance: f64,
) -> Vec<(&'a ExampleAnchor, ScalePos)> {
    let mut out: Vec<(&ExampleAnchor, ScalePos)> = Vec::new();
    for &(a, p) in sorted {
        match out.last() {
            Some(&(_, last)) if p.get() - last.get() < min_distance => {}
            _ => out.push((a, p)),
        }
    }
    out
}

/// Keeps `k` entries spread evenly by index, always including both ends.
fn thin<T: Copy>(v: &[T], k: usize) -> Vec<T> {
    if v.len() <= k {
        return v.to_vec();
    }
    if k == 1 {
        return vec![v[0]];
    }
    let last = (v.len() - 1) as f64;
    (0..k).map(|i| v[((i as f64) * last / ((k - 1) as f64)).round() as usize]).collect()
}

/// Picks the global grounding anchors for `step`.
///
/// Anchors are sorted by display position and chosen greedily from the bottom
/// of the scale. When the pass yields more than `target_max`, an evenly
/// indexed subset of it is kept.
pub fn select_global_anchors<'a>(
    pool: &'a AnchorPool,
    step: BoundStep,
    params: &SelectionParams,
) -> Result<GlobalSelection<'a>, AnchorError> {
    params.check()?;
    if pool.is_empty() {
        return Err(AnchorError::NoAnchors);
    }
    let sorted = pool.sorted_for(step);
    let (mut chosen, distance) = match params.spacing {
        SpacingRule::Fixed { min_distance } => (greedy_spaced(&sorted, min_distance), min_distance),
        SpacingRule::Adaptive { start, floor } => {
            let mut d = start;
            loop {
                let chosen = greedy_spaced(&sorted, d);
                if chosen.len() >= params.target_min || chosen.len() == sorted.len() || d <= floor {
                    break (chosen, d);
                }
                d = (d / 2.0).max(floor);
            }
        }
    };
    if chosen.len() > params.target_max {
        chosen = thin(&chosen, params.target_max);
    }
    Ok(GlobalSelection { anchors: chosen, min_distance: distance })
}

/// The closest anchors at or below `pos` and strictly above it.
pub fn local_neighbors(
    pool: &AnchorPool,
    step: BoundStep,
    pos: ScalePos,
) -> (Option<&ExampleAnchor>, Option<&ExampleAnchor>) {
    let mut below: Option<(&ExampleAnchor, ScalePos)> = None;
    let mut above: Option<(&ExampleAnchor, ScalePos)> = None;
    for a in pool.anchors() {
        let cand = (a, anchor_display_position(a, step));
        if cand.1 <= pos {
            if below.is_none_or(|b| by_position(&cand, &b) == Ordering::Greater) {
                below = Some(cand);
            }
        } else if above.is_none_or(|b| by_position(&cand, &b) == Ordering::Less) {
            above = Some(cand);
        }
    }
    (below.map(|b| b.0), above.map(|a| a.0))
}

/// One anchor as it appears on the scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorView {
    pub anchor: ExampleAnchor,
    pub display: ScalePos,
    /// Shown only because it neighbours the handle, not as global grounding.
    pub is_local: bool,
}

/// Global anchors plus the local neighbours of `pos`, deduplicated by item and
/// sorted by display position.
pub fn effective_anchor_view(
    pool: &AnchorPool,
    step: BoundStep,
    pos: ScalePos,
    params: &SelectionParams,
) -> Result<Vec<AnchorView>, AnchorError> {
    if pool.is_empty() {
        return Ok(Vec::new());
    }
    let global = select_global_anchors(pool, step, params)?;
    let mut view: Vec<AnchorView> =
        global.anchors.iter().map(|(a, p)| AnchorView { anchor: (*a).clone(), display: *p, is_local: false }).collect();
    let (below, above) = local_neighbors(pool, step, pos);
    for n in [below, above].into_iter().flatten() {
        if !view.iter().any(|v| v.anchor.item_id == n.item_id) {
            view.push(AnchorView { anchor: n.clone(), display: anchor_display_position(n, step), is_local: true });
        }
    }
    view.sort_by(|x, y| {
        x.display.get().total_cmp(&y.display.get()).then_with(|| x.anchor.item_id.cmp(&y.anchor.item_id))
    });
    Ok(view)
}
