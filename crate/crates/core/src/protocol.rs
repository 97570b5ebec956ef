//! The per-annotator session state machine.
//!
//! A session moves `Training → Annotating → Complete`. In range mode every
//! item goes through a lower-bound step, an upper-bound step and a commit; the
//! single-value modes place one value and commit. Every transition is driven
//! by a [`SessionEvent`], so a session can be rebuilt by replaying its events.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anchors::{
    anchor_display_position, effective_anchor_view, AnchorError, AnchorPool, AnchorView, BoundStep, SelectionParams,
};
use crate::model::{
    AnchorOrigin, AnnotatorId, Bounds, ExampleAnchor, Item, ItemId, ItemKind, PairwiseJudgment, RangeAnnotation,
    RangeViolation, Relation, ScalePos, SemanticAnchor, SessionId, Timestamp,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("invalid session configuration: {0}")]
    Config(String),
    #[error("operation not allowed in phase {0:?}")]
    WrongPhase(Phase),
    #[error("operation does not match the active step")]
    StepMismatch,
    #[error("upper bound {upper} is below lower bound {lower}")]
    Order { lower: f64, upper: f64 },
    #[error("the slider has not been interacted with for this step")]
    NoInteraction,
    #[error("placement is incomplete")]
    Incomplete,
    #[error("session is complete")]
    Done,
    #[error("invalid position: {0}")]
    Range(#[from] RangeViolation),
    #[error("judgments must cover exactly the pending comparison items")]
    JudgmentCoverage,
    #[error(transparent)]
    Anchor(#[from] AnchorError),
}

/// Which annotation interface a session uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interface {
    /// Single value, semantic text anchors only.
    SvSa,
    /// Single value, example anchors only.
    SvEa,
    /// Two-step range with semantic and example anchors.
    RHa,
    /// Direct pairwise comparisons.
    Pairwise,
}

impl Interface {
    pub fn uses_ranges(self) -> bool {
        self == Interface::RHa
    }

    pub fn uses_slider(self) -> bool {
        self != Interface::Pairwise
    }

    pub fn shows_examples(self) -> bool {
        matches!(self, Interface::SvEa | Interface::RHa)
    }

    pub fn shows_semantic(self) -> bool {
        matches!(self, Interface::SvSa | Interface::RHa)
    }
}

/// Repeats of the item at `source` placed at each of `repeats`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbePlan {
    pub source: usize,
    pub repeats: Vec<usize>,
}

impl ProbePlan {
    /// First item repeated as the 10th and 20th.
    pub fn first_item_at_10_and_20() -> Self {
        ProbePlan { source: 0, repeats: vec![9, 19] }
    }

    fn check(&self, len: usize) -> Result<(), SessionError> {
        if self.source >= len {
            return Err(SessionError::Config(format!("probe source {} outside sequence of {len}", self.source)));
        }
        if self.repeats.is_empty() {
            return Err(SessionError::Config("probe plan has no repeat indices".into()));
        }
        if !self.repeats.windows(2).all(|w| w[0] < w[1]) {
            return Err(SessionError::Config("probe repeat indices must strictly increase".into()));
        }
        for &r in &self.repeats {
            if r >= len || r <= self.source {
                return Err(SessionError::Config(format!(
                    "probe repeat index {r} must lie after the source and within a sequence of {len}"
                )));
            }
        }
        Ok(())
    }
}

pub const DEFAULT_TRAINING_TOLERANCE: f64 = 0.08;

/// The reference answer for the gated training item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReference {
    pub item: Item,
    pub bounds: Bounds,
    /// Allowed deviation per bound.
    pub tolerance: f64,
}

impl TrainingReference {
    /// The shared age-estimation portrait used to teach the slider.
    pub fn age_portrait() -> Self {
        TrainingReference {
            item: Item {
                id: ItemId::new("training-age-portrait"),
                kind: ItemKind::Image,
                body: "training/age-portrait.jpg".into(),
                meta: None,
            },
            bounds: Bounds::new(0.30, 0.45).expect("static bounds"),
            tolerance: DEFAULT_TRAINING_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub interface: Interface,
    pub seed_anchors: AnchorPool,
    pub augment_with_self: bool,
    #[serde(default)]
    pub probe_plan: Option<ProbePlan>,
    /// `None` skips the training gate.
    #[serde(default)]
    pub training: Option<TrainingReference>,
    #[serde(default)]
    pub selection: SelectionParams,
    /// Total annotation time below this raises the work-time flag.
    #[serde(default)]
    pub min_work_time_ms: Option<u64>,
}

impl SessionConfig {
    pub fn new(interface: Interface, seed_anchors: AnchorPool) -> Self {
        SessionConfig {
            interface,
            seed_anchors,
            augment_with_self: interface == Interface::RHa,
            probe_plan: None,
            training: Some(TrainingReference::age_portrait()),
            selection: SelectionParams::default(),
            min_work_time_ms: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Training,
    Annotating,
    Complete,
}

/// A slider placement. Range sessions use `Lower`/`Upper`; single-value
/// sessions use `Value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "pos")]
pub enum Placement {
    Lower(ScalePos),
    Upper(ScalePos),
    Value(ScalePos),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackTarget {
    Lower,
    Upper,
    Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    TooLow,
    TooHigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingFeedback {
    pub target: FeedbackTarget,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "result")]
pub enum TrainingOutcome {
    /// The placement missed the reference; the phase is unchanged.
    Feedback(TrainingFeedback),
    /// A partial answer was right; continue with the next bound.
    Continue,
    /// Training finished; annotation begins.
    Pass,
}

/// Everything that can happen to a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum SessionEvent {
    Interaction { at: Timestamp },
    Training { placement: Placement, at: Timestamp },
    PlaceLower { pos: ScalePos, at: Timestamp },
    PlaceUpper { pos: ScalePos, at: Timestamp },
    PlaceValue { pos: ScalePos, at: Timestamp },
    Judge { judgments: Vec<(ItemId, Relation)>, at: Timestamp },
    Commit { at: Timestamp },
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventOutcome {
    Ack,
    Training(TrainingOutcome),
    Committed,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
struct Pending {
    lower: Option<(ScalePos, u64)>,
    upper: Option<(ScalePos, u64)>,
    value: Option<(ScalePos, u64)>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingState {
    pub attempts: u32,
    pub failures: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: SessionId,
    pub annotator_id: AnnotatorId,
    pub config: SessionConfig,
    sequence: Vec<Item>,
    cursor: usize,
    phase: Phase,
    step: Option<BoundStep>,
    pending: Pending,
    pending_judgments: Vec<(ItemId, Relation)>,
    annotations: Vec<RangeAnnotation>,
    judgments: Vec<PairwiseJudgment>,
    interaction_seen: bool,
    step_started_at: Timestamp,
    training: TrainingState,
}

/// Builds the item sequence, applying any probe plan.
pub fn build_sequence(items: &[Item], probe: Option<&ProbePlan>) -> Result<Vec<Item>, SessionError> {
    if items.is_empty() {
        return Err(SessionError::Config("a session needs at least one item".into()));
    }
    let mut ids = BTreeSet::new();
    for it in items {
        if !ids.insert(&it.id) {
            return Err(SessionError::Config(format!("duplicate item {}", it.id)));
        }
    }
    let mut seq = items.to_vec();
    if let Some(plan) = probe {
        plan.check(seq.len())?;
        for &r in &plan.repeats {
            seq[r] = seq[plan.source].clone();
        }
    }
    Ok(seq)
}

/// Starts a session. Sessions with a training reference begin in `Training`.
pub fn start_session(
    id: impl Into<SessionId>,
    annotator_id: impl Into<AnnotatorId>,
    items: &[Item],
    config: SessionConfig,
    at: Timestamp,
) -> Result<Session, SessionError> {
    let sequence = build_sequence(items, config.probe_plan.as_ref())?;
    if let Some(t) = &config.training {
        if !(t.tolerance >= 0.0 && t.tolerance.is_finite()) {
            return Err(SessionError::Config("training tolerance must be a non-negative number".into()));
        }
    }
    let gated = config.training.is_some() && config.interface.uses_slider();
    let mut s = Session {
        id: id.into(),
        annotator_id: annotator_id.into(),
        config,
        sequence,
        cursor: 0,
        phase: if gated { Phase::Training } else { Phase::Annotating },
        step: None,
        pending: Pending::default(),
        pending_judgments: Vec::new(),
        annotations: Vec::new(),
        judgments: Vec::new(),
        interaction_seen: false,
        step_started_at: at,
        training: TrainingState::default(),
    };
    s.reset_step();
    if s.phase == Phase::Annotating {
        s.complete_if_exhausted();
    }
    Ok(s)
}

/// What the annotator should see next.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskView {
    pub phase: Phase,
    pub item: Item,
    pub index: usize,
    pub total: usize,
    /// `None` for single-value placement and pairwise judging.
    pub step: Option<BoundStep>,
    pub handle_start: ScalePos,
    pub frozen_lower: Option<ScalePos>,
    pub semantic: Vec<SemanticAnchor>,
    /// Global anchors plus the neighbours of the starting handle position.
    pub anchors: Vec<AnchorView>,
    /// Every anchor visible in this task with its display position, for
    /// client-side neighbour lookup while scrubbing.
    pub pool: Vec<(ExampleAnchor, ScalePos)>,
    /// Pairwise mode: items still to be compared against `item`.
    pub compare_with: Vec<Item>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityReport {
    pub all_identical: bool,
    pub extreme_pinning: bool,
    pub min_work_time_violation: bool,
}

const IDENTICAL_TOLERANCE: f64 = 1e-6;
const EXTREME_MARGIN: f64 = 0.01;

impl Session {
    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn step(&self) -> Option<BoundStep> {
        self.step
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn sequence(&self) -> &[Item] {
        &self.sequence
    }

    pub fn pending_lower(&self) -> Option<ScalePos> {
        self.pending.lower.map(|(p, _)| p)
    }

    pub fn annotations(&self) -> &[RangeAnnotation] {
        &self.annotations
    }

    pub fn judgments(&self) -> &[PairwiseJudgment] {
        &self.judgments
    }

    pub fn interaction_seen(&self) -> bool {
        self.interaction_seen
    }

    pub fn training_state(&self) -> &TrainingState {
        &self.training
    }

    pub fn current_item(&self) -> Option<&Item> {
        match self.phase {
            Phase::Training => self.config.training.as_ref().map(|t| &t.item),
            Phase::Annotating => self.sequence.get(self.cursor),
            Phase::Complete => None,
        }
    }

    fn slider_step_start(&self) -> Option<BoundStep> {
        self.config.interface.uses_ranges().then_some(BoundStep::LowerBound)
    }

    fn reset_step(&mut self) {
        self.step = self.slider_step_start();
        self.pending = Pending::default();
        self.pending_judgments.clear();
        self.interaction_seen = false;
    }

    fn pairwise_len(&self) -> usize {
        self.sequence.len().saturating_sub(1)
    }

    fn complete_if_exhausted(&mut self) {
        let end = if self.config.interface == Interface::Pairwise { self.pairwise_len() } else { self.sequence.len() };
        if self.cursor >= end {
            self.phase = Phase::Complete;
            self.step = None;
        }
    }

    /// The anchor pool the annotator sees for the current item: seed anchors,
    /// their own earlier annotations when augmenting, never the item itself.
    pub fn visible_pool(&self) -> AnchorPool {
        let iface = self.config.interface;
        let semantic = if iface.shows_semantic() { self.config.seed_anchors.semantic().to_vec() } else { Vec::new() };
        let mut pool = if iface.shows_examples() { self.config.seed_anchors.clone() } else { AnchorPool::default() };
        if iface.shows_examples() && self.config.augment_with_self && self.phase == Phase::Annotating {
            for a in &self.annotations {
                pool.upsert(ExampleAnchor::new(a.item_id.clone(), a.bounds, AnchorOrigin::SessionSelf));
            }
        }
        let pool = match self.current_item() {
            Some(item) => pool.without(&item.id),
            None => pool,
        };
        pool.with_semantic(semantic).expect("semantic anchors validated with the seed pool")
    }

    /// Display projection for the current step. Single-value placement uses the
    /// lower-bound projection, which for point anchors is the point itself.
    fn projection(&self) -> BoundStep {
        self.step.unwrap_or(BoundStep::LowerBound)
    }

    fn handle_start(&self) -> ScalePos {
        match self.step {
            Some(BoundStep::LowerBound) => ScalePos::MIN,
            Some(BoundStep::UpperBound) => ScalePos::MAX,
            None => ScalePos::clamped(0.5),
        }
    }

    pub fn current_task_view(&self) -> Result<TaskView, SessionError> {
        let item = self.current_item().ok_or(SessionError::Done)?.clone();
        let pool = self.visible_pool();
        let projection = self.projection();
        let handle_start = self.handle_start();
        let anchors = self.anchor_view_at(&pool, handle_start)?;
        let compare_with = if self.config.interface == Interface::Pairwise && self.phase == Phase::Annotating {
            self.sequence[self.cursor + 1..].to_vec()
        } else {
            Vec::new()
        };
        let (index, total) = match self.phase {
            Phase::Training => (0, 1),
            _ => (self.cursor, self.sequence.len()),
        };
        Ok(TaskView {
            phase: self.phase,
            item,
            index,
            total,
            step: self.step,
            handle_start,
            frozen_lower: if self.step == Some(BoundStep::UpperBound) { self.pending_lower() } else { None },
            semantic: pool.semantic().to_vec(),
            anchors,
            pool: pool.sorted_for(projection).into_iter().map(|(a, p)| (a.clone(), p)).collect(),
            compare_with,
        })
    }

    fn anchor_view_at(&self, pool: &AnchorPool, pos: ScalePos) -> Result<Vec<AnchorView>, SessionError> {
        if !self.config.interface.uses_slider() {
            return Ok(Vec::new());
        }
        Ok(effective_anchor_view(pool, self.projection(), pos, &self.config.selection)?)
    }

    /// The anchor view while the handle is scrubbed to `pos`.
    pub fn scrub(&self, pos: ScalePos) -> Result<Vec<AnchorView>, SessionError> {
        if self.phase == Phase::Complete {
            return Err(SessionError::Done);
        }
        self.anchor_view_at(&self.visible_pool(), pos)
    }

    pub fn apply(&mut self, event: &SessionEvent) -> Result<EventOutcome, SessionError> {
        match event {
            SessionEvent::Interaction { .. } => {
                if self.phase == Phase::Complete {
                    return Err(SessionError::Done);
                }
                self.interaction_seen = true;
                Ok(EventOutcome::Ack)
            }
            SessionEvent::Training { placement, at } => self.training_step(*placement, *at).map(EventOutcome::Training),
            SessionEvent::PlaceLower { pos, at } => self.place_lower(*pos, *at).map(|_| EventOutcome::Ack),
            SessionEvent::PlaceUpper { pos, at } => self.place_upper(*pos, *at).map(|_| EventOutcome::Ack),
            SessionEvent::PlaceValue { pos, at } => self.place_value(*pos, *at).map(|_| EventOutcome::Ack),
            SessionEvent::Judge { judgments, .. } => self.judge(judgments.clone()).map(|_| EventOutcome::Ack),
            SessionEvent::Commit { at } => self.commit_item(*at).map(|_| EventOutcome::Committed),
        }
    }

    pub fn record_interaction(&mut self, at: Timestamp) -> Result<(), SessionError> {
        self.apply(&SessionEvent::Interaction { at }).map(|_| ())
    }

    fn require_phase(&self, phase: Phase) -> Result<(), SessionError> {
        if self.phase == phase {
            Ok(())
        } else if self.phase == Phase::Complete {
            Err(SessionError::Done)
        } else {
            Err(SessionError::WrongPhase(self.phase))
        }
    }

    /// Checks a training placement against the reference within tolerance.
    pub fn training_step(&mut self, placement: Placement, at: Timestamp) -> Result<TrainingOutcome, SessionError> {
        self.require_phase(Phase::Training)?;
        let reference = self.config.training.clone().ok_or(SessionError::WrongPhase(self.phase))?;
        let (target, expected) = match (placement, self.step) {
            (Placement::Lower(_), Some(BoundStep::LowerBound)) => {
                (FeedbackTarget::Lower, reference.bounds.lower().get())
            }
            (Placement::Upper(p), Some(BoundStep::UpperBound)) => {
                if let Some(l) = self.pending_lower() {
                    if p < l {
                        return Err(SessionError::Order { lower: l.get(), upper: p.get() });
                    }
                }
                (FeedbackTarget::Upper, reference.bounds.upper().get())
            }
            (Placement::Value(_), None) => (FeedbackTarget::Value, reference.bounds.midpoint()),
            _ => return Err(SessionError::StepMismatch),
        };
        let pos = match placement {
            Placement::Lower(p) | Placement::Upper(p) | Placement::Value(p) => p.get(),
        };
        self.training.attempts += 1;
        if (pos - expected).abs() > reference.tolerance {
            self.training.failures += 1;
            let direction = if pos < expected { Direction::TooLow } else { Direction::TooHigh };
            return Ok(TrainingOutcome::Feedback(TrainingFeedback { target, direction }));
        }
        if target == FeedbackTarget::Lower {
            self.pending.lower = Some((ScalePos::clamped(pos), 0));
            self.step = Some(BoundStep::UpperBound);
            return Ok(TrainingOutcome::Continue);
        }
        self.phase = Phase::Annotating;
        self.step_started_at = at;
        self.reset_step();
        self.complete_if_exhausted();
        Ok(TrainingOutcome::Pass)
    }

    fn require_slider_step(&self, step: Option<BoundStep>) -> Result<(), SessionError> {
        self.require_phase(Phase::Annotating)?;
        if !self.config.interface.uses_slider() || self.step != step {
            return Err(SessionError::StepMismatch);
        }
        if !self.interaction_seen {
            return Err(SessionError::NoInteraction);
        }
        Ok(())
    }

    pub fn place_lower(&mut self, pos: ScalePos, at: Timestamp) -> Result<(), SessionError> {
        self.require_slider_step(Some(BoundStep::LowerBound))?;
        self.pending.lower = Some((pos, at.since(self.step_started_at)));
        self.step = Some(BoundStep::UpperBound);
        self.step_started_at = at;
        self.interaction_seen = false;
        Ok(())
    }

    /// Places (or re-places) the upper bound. Rejected below the lower bound.
    pub fn place_upper(&mut self, pos: ScalePos, at: Timestamp) -> Result<(), SessionError> {
        self.require_slider_step(Some(BoundStep::UpperBound))?;
        let (lower, _) = self.pending.lower.ok_or(SessionError::Incomplete)?;
        if pos < lower {
            return Err(SessionError::Order { lower: lower.get(), upper: pos.get() });
        }
        self.pending.upper = Some((pos, at.since(self.step_started_at)));
        Ok(())
    }

    pub fn place_value(&mut self, pos: ScalePos, at: Timestamp) -> Result<(), SessionError> {
        self.require_slider_step(None)?;
        self.pending.value = Some((pos, at.since(self.step_started_at)));
        Ok(())
    }

    /// Pairwise mode: relation of each remaining item to the current one.
    pub fn judge(&mut self, judgments: Vec<(ItemId, Relation)>) -> Result<(), SessionError> {
        self.require_phase(Phase::Annotating)?;
        if self.config.interface != Interface::Pairwise {
            return Err(SessionError::StepMismatch);
        }
        let expected: BTreeSet<&ItemId> = self.sequence[self.cursor + 1..].iter().map(|i| &i.id).collect();
        let given: BTreeSet<&ItemId> = judgments.iter().map(|(id, _)| id).collect();
        if given.len() != judgments.len() || given != expected {
            return Err(SessionError::JudgmentCoverage);
        }
        self.pending_judgments = judgments;
        Ok(())
    }

    /// Finalises the current item and advances the cursor.
    pub fn commit_item(&mut self, at: Timestamp) -> Result<(), SessionError> {
        self.require_phase(Phase::Annotating)?;
        let item_id = self.sequence[self.cursor].id.clone();
        match self.config.interface {
            Interface::RHa => {
                let ((lower, d_lower), (upper, d_upper)) = match (self.pending.lower, self.pending.upper) {
                    (Some(l), Some(u)) => (l, u),
                    _ => return Err(SessionError::Incomplete),
                };
                let bounds = Bounds::new(lower.get(), upper.get())?;
                self.push_annotation(item_id, bounds, [d_lower, d_upper], at);
            }
            Interface::SvSa | Interface::SvEa => {
                let (value, d) = self.pending.value.ok_or(SessionError::Incomplete)?;
                self.push_annotation(item_id, Bounds::point(value), [d, 0], at);
            }
            Interface::Pairwise => {
                if self.pending_judgments.is_empty() {
                    return Err(SessionError::Incomplete);
                }
                for (other, rel) in std::mem::take(&mut self.pending_judgments) {
                    self.judgments.push(PairwiseJudgment {
                        annotator: self.annotator_id.clone(),
                        a: other,
                        b: item_id.clone(),
                        rel,
                    });
                }
            }
        }
        self.cursor += 1;
        self.step_started_at = at;
        self.reset_step();
        self.complete_if_exhausted();
        Ok(())
    }

    fn push_annotation(&mut self, item_id: ItemId, bounds: Bounds, step_durations: [u64; 2], at: Timestamp) {
        self.annotations.push(RangeAnnotation {
            item_id,
            annotator_id: self.annotator_id.clone(),
            bounds,
            step_durations,
            created_at: at,
        });
    }

    /// Placements of the probe item in sequence order (midpoints for ranges).
    pub fn probe_attempts(&self) -> Vec<f64> {
        let Some(plan) = &self.config.probe_plan else { return Vec::new() };
        let probe = &self.sequence[plan.source].id;
        self.annotations.iter().filter(|a| &a.item_id == probe).map(|a| a.bounds.midpoint()).collect()
    }

    /// Flags the spam patterns checked during manual review. Advisory only.
    pub fn quality_check(&self) -> Result<QualityReport, SessionError> {
        if self.phase != Phase::Complete {
            return Err(SessionError::WrongPhase(self.phase));
        }
        Ok(quality_of(&self.annotations, self.config.min_work_time_ms))
    }
}

/// Quality flags over a list of committed placements.
pub fn quality_of(annotations: &[RangeAnnotation], min_work_time_ms: Option<u64>) -> QualityReport {
    let all_identical = match annotations.split_first() {
        Some((first, rest)) if !rest.is_empty() => rest.iter().all(|a| {
            (a.lower().get() - first.lower().get()).abs() <= IDENTICAL_TOLERANCE
                && (a.upper().get() - first.upper().get()).abs() <= IDENTICAL_TOLERANCE
        }),
        _ => false,
    };
    let near_extreme = |p: ScalePos| p.get() <= EXTREME_MARGIN || p.get() >= 1.0 - EXTREME_MARGIN;
    let pinned = annotations.iter().filter(|a| near_extreme(a.lower()) && near_extreme(a.upper())).count();
    // pinned / n >= 0.9, kept in integers
    let extreme_pinning = !annotations.is_empty() && pinned * 10 >= annotations.len() * 9;
    let total_ms: u64 = annotations.iter().flat_map(|a| a.step_durations).sum();
    let min_work_time_violation = min_work_time_ms.is_some_and(|floor| total_ms < floor);
    QualityReport { all_identical, extreme_pinning, min_work_time_violation }
}

/// Display position of an anchor for the given projection. Re-exported for
/// payload builders.
pub fn display_for(anchor: &ExampleAnchor, step: Option<BoundStep>) -> ScalePos {
    anchor_display_position(anchor, step.unwrap_or(BoundStep::LowerBound))
}
