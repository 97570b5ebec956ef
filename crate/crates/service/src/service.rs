//! Operations shared by the HTTP API and the CLI. Callers supply timestamps,
//! so the same calls replay deterministically in tests and simulations.

use goldilocks_core::analysis::{analyze, AnalysisReport};
use goldilocks_core::anchors::BoundStep;
use goldilocks_core::cold_start::{DrawOutcome, SeedDraft};
use goldilocks_core::exec::Execution;
use goldilocks_core::model::{
    AnnotatorId, ExampleAnchor, Item, ItemId, ItemKind, Relation, ScalePos, SessionId, Timestamp,
};
use goldilocks_core::protocol::{
    EventOutcome, Interface, Phase, Placement, QualityReport, SessionEvent, TrainingOutcome,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::DEFAULT_PARTITION_SIZE;
use crate::dataset::{valid_id, Dataset};
use crate::export::{self, ExportError};
use crate::state::{ColdStartOp, Outcome, Record, StateError};
use crate::store::{Store, StoreError};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("{0}")]
    BadRequest(String),
}

impl From<StateError> for ServiceError {
    fn from(e: StateError) -> Self {
        ServiceError::Store(StoreError::State(e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemPayload {
    pub id: ItemId,
    pub kind: ItemKind,
    pub body: String,
}

impl From<&Item> for ItemPayload {
    fn from(i: &Item) -> Self {
        ItemPayload { id: i.id.clone(), kind: i.kind, body: i.body.clone() }
    }
}

/// An anchor as the client sees it: where it sits and what it shows, never
/// which item or whose annotation it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorPayload {
    pub display: f64,
    pub lower: f64,
    pub upper: f64,
    pub kind: ItemKind,
    pub body: String,
    #[serde(default)]
    pub local: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticPayload {
    pub pos: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPayload {
    pub session: SessionId,
    pub interface: Interface,
    pub phase: Phase,
    pub index: usize,
    pub total: usize,
    pub step: Option<BoundStep>,
    pub handle_start: f64,
    pub frozen_lower: Option<f64>,
    pub item: ItemPayload,
    pub semantic: Vec<SemanticPayload>,
    pub anchors: Vec<AnchorPayload>,
    pub pool: Vec<AnchorPayload>,
    pub compare_with: Vec<ItemPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentEntry {
    pub item: ItemId,
    pub rel: Relation,
}

/// A submitted step; the service stamps the time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StepRequest {
    Interaction,
    Training { placement: Placement },
    PlaceLower { pos: ScalePos },
    PlaceUpper { pos: ScalePos },
    PlaceValue { pos: ScalePos },
    Judge { judgments: Vec<JudgmentEntry> },
    Commit,
}

impl StepRequest {
    pub fn at(self, at: Timestamp) -> SessionEvent {
        match self {
            StepRequest::Interaction => SessionEvent::Interaction { at },
            StepRequest::Training { placement } => SessionEvent::Training { placement, at },
            StepRequest::PlaceLower { pos } => SessionEvent::PlaceLower { pos, at },
            StepRequest::PlaceUpper { pos } => SessionEvent::PlaceUpper { pos, at },
            StepRequest::PlaceValue { pos } => SessionEvent::PlaceValue { pos, at },
            StepRequest::Judge { judgments } => {
                SessionEvent::Judge { judgments: judgments.into_iter().map(|j| (j.item, j.rel)).collect(), at }
            }
            StepRequest::Commit => SessionEvent::Commit { at },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum StepResponse {
    Ack,
    Committed { phase: Phase },
    Training { outcome: TrainingOutcome, phase: Phase },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRequest {
    pub annotator: AnnotatorId,
    pub interface: Interface,
    #[serde(default)]
    pub probe: bool,
    #[serde(default = "default_true")]
    pub training: bool,
    /// Explicit sequence; by default the next partition in rotation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<Vec<ItemId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session: SessionId,
    pub items: usize,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub id: String,
    pub items: usize,
    pub anchors: usize,
    pub semantic: usize,
    pub sessions: usize,
}

pub struct Service {
    store: Store,
    pub partition_size: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Service {
    pub fn new(store: Store) -> Self {
        Service { store, partition_size: DEFAULT_PARTITION_SIZE, seed: 0, execution: Execution::default() }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut Store {
        &mut self.store
    }

    pub fn create_dataset(&mut self, dataset: Dataset) -> Result<DatasetSummary, ServiceError> {
        let id = dataset.id.clone();
        self.store.append(Record::DatasetCreated { dataset })?;
        self.dataset_summary(&id)
    }

    pub fn dataset_summary(&self, id: &str) -> Result<DatasetSummary, ServiceError> {
        let st = self.store.state();
        let d = st.dataset(id)?;
        Ok(DatasetSummary {
            id: d.id.clone(),
            items: d.items.len(),
            anchors: d.anchors.len(),
            semantic: d.anchors.semantic().len(),
            sessions: st.sessions_of(id).count(),
        })
    }

    pub fn create_session(
        &mut self,
        dataset: &str,
        req: SessionRequest,
        at: Timestamp,
    ) -> Result<SessionCreated, ServiceError> {
        if !valid_id(req.annotator.as_str()) {
            return Err(ServiceError::BadRequest(format!("invalid annotator token {:?}", req.annotator.as_str())));
        }
        let st = self.store.state();
        let ds = st.dataset(dataset)?;
        let items = match req.items {
            Some(ids) => ids,
            None => {
                let parts = ds.partitions(self.partition_size);
                if parts.is_empty() {
                    return Err(ServiceError::BadRequest(format!("dataset {dataset} has no items to annotate")));
                }
                let turn = st.sessions_of(dataset).filter(|(_, r)| r.session.config.interface == req.interface).count();
                parts[turn % parts.len()].iter().map(|i| i.id.clone()).collect()
            }
        };
        let session = SessionId::new(format!("{dataset}.s{:05}", st.sessions_of(dataset).count()));
        self.store.append(Record::SessionCreated {
            session: session.clone(),
            dataset: dataset.to_string(),
            annotator: req.annotator,
            interface: req.interface,
            items,
            probe: req.probe,
            training: req.training,
            at,
        })?;
        let s = &self.store.state().session(&session)?.session;
        Ok(SessionCreated { session, items: s.sequence().len(), phase: s.phase() })
    }

    pub fn task(&self, session: &SessionId) -> Result<TaskPayload, ServiceError> {
        let st = self.store.state();
        let rec = st.session(session)?;
        let ds = st.dataset(&rec.dataset)?;
        let view = rec.session.current_task_view().map_err(StateError::from)?;
        let anchor = |a: &ExampleAnchor, display: ScalePos, local: bool| -> Option<AnchorPayload> {
            let item = ds.item(&a.item_id)?;
            Some(AnchorPayload {
                display: display.get(),
                lower: a.lower().get(),
                upper: a.upper().get(),
                kind: item.kind,
                body: item.body.clone(),
                local,
            })
        };
        Ok(TaskPayload {
            session: session.clone(),
            interface: rec.session.config.interface,
            phase: view.phase,
            index: view.index,
            total: view.total,
            step: view.step,
            handle_start: view.handle_start.get(),
            frozen_lower: view.frozen_lower.map(ScalePos::get),
            item: ItemPayload::from(&view.item),
            semantic: view
                .semantic
                .iter()
                .map(|s| SemanticPayload { pos: s.position.get(), label: s.label.clone() })
                .collect(),
            anchors: view.anchors.iter().filter_map(|v| anchor(&v.anchor, v.display, v.is_local)).collect(),
            pool: view.pool.iter().filter_map(|(a, p)| anchor(a, *p, false)).collect(),
            compare_with: view.compare_with.iter().map(ItemPayload::from).collect(),
        })
    }

    /// Anchors shown while the handle sits at `pos`.
    pub fn scrub(&self, session: &SessionId, pos: ScalePos) -> Result<Vec<AnchorPayload>, ServiceError> {
        let st = self.store.state();
        let rec = st.session(session)?;
        let ds = st.dataset(&rec.dataset)?;
        let views = rec.session.scrub(pos).map_err(StateError::from)?;
        Ok(views
            .iter()
            .filter_map(|v| {
                let item = ds.item(&v.anchor.item_id)?;
                Some(AnchorPayload {
                    display: v.display.get(),
                    lower: v.anchor.lower().get(),
                    upper: v.anchor.upper().get(),
                    kind: item.kind,
                    body: item.body.clone(),
                    local: v.is_local,
                })
            })
            .collect())
    }

    pub fn submit(
        &mut self,
        session: &SessionId,
        step: StepRequest,
        at: Timestamp,
    ) -> Result<StepResponse, ServiceError> {
        let outcome = self.store.append(Record::Session { session: session.clone(), event: step.at(at) })?;
        let phase = self.store.state().session(session)?.session.phase();
        Ok(match outcome {
            Outcome::Event(EventOutcome::Committed) => StepResponse::Committed { phase },
            Outcome::Event(EventOutcome::Training(outcome)) => StepResponse::Training { outcome, phase },
            _ => StepResponse::Ack,
        })
    }

    pub fn quality(&self, session: &SessionId) -> Result<QualityReport, ServiceError> {
        Ok(self.store.state().session(session)?.session.quality_check().map_err(StateError::from)?)
    }

    pub fn export(&self, dataset: &str, format: &str) -> Result<String, ServiceError> {
        let data = export::collect(self.store.state(), dataset)?;
        Ok(export::render(&data, format)?)
    }

    pub fn analyze(&self, dataset: &str) -> Result<AnalysisReport, ServiceError> {
        let data = export::collect(self.store.state(), dataset)?;
        Ok(analyze(&export::corpus(&data)?, self.execution))
    }

    pub fn cold_start(&mut self, dataset: &str, op: ColdStartOp) -> Result<Outcome, ServiceError> {
        Ok(self.store.append(Record::ColdStart { dataset: dataset.to_string(), op })?)
    }

    /// Draws with an explicit seed, or one derived from the master seed and
    /// the log position.
    pub fn cold_start_draw(&mut self, dataset: &str, n: usize, seed: Option<u64>) -> Result<DrawOutcome, ServiceError> {
        let seed = seed.unwrap_or_else(|| self.seed.wrapping_add(self.store.state().seq + 1));
        match self.cold_start(dataset, ColdStartOp::Draw { n, seed })? {
            Outcome::Drawn(d) => Ok(d),
            other => unreachable!("draw produced {other:?}"),
        }
    }

    pub fn draft(&self, dataset: &str) -> Result<&SeedDraft, ServiceError> {
        Ok(self.store.state().draft(dataset)?)
    }
}
