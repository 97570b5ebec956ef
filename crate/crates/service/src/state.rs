//! Service state and the log records that drive it. State changes only by
//! applying records in sequence, so replaying the log rebuilds it exactly.

use std::collections::BTreeMap;

use goldilocks_core::cold_start::{reintroduce, ColdStartError, DrawOutcome, SeedDraft};
use goldilocks_core::model::{AnnotatorId, Item, ItemId, SemanticAnchor, SessionId, Timestamp};
use goldilocks_core::protocol::{
    start_session, EventOutcome, Interface, ProbePlan, Session, SessionConfig, SessionError, SessionEvent,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, IngestError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("dataset {0} not found")]
    NoDataset(String),
    #[error("dataset {0} already exists")]
    DatasetExists(String),
    #[error("session {0} not found")]
    NoSession(SessionId),
    #[error("session {0} already exists")]
    SessionExists(SessionId),
    #[error("no cold-start draft for dataset {0}")]
    NoDraft(String),
    #[error("item {0} not in dataset")]
    NoItem(ItemId),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    ColdStart(#[from] ColdStartError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ColdStartOp {
    /// Starts a draft; empty `semantic` keeps the dataset's labels.
    Open {
        #[serde(default)]
        semantic: Vec<SemanticAnchor>,
    },
    Draw {
        n: usize,
        seed: u64,
    },
    Drop {
        item: ItemId,
    },
    Place {
        annotator: AnnotatorId,
        item: ItemId,
        pos: f64,
    },
    /// Replaces the dataset's anchors with the averaged seed set.
    Finalize {
        min_count: usize,
    },
    /// Takes a seed anchor off the scale so it is annotated again.
    Reintroduce {
        item: ItemId,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    DatasetCreated {
        dataset: Dataset,
    },
    SessionCreated {
        session: SessionId,
        dataset: String,
        annotator: AnnotatorId,
        interface: Interface,
        items: Vec<ItemId>,
        #[serde(default)]
        probe: bool,
        #[serde(default)]
        training: bool,
        at: Timestamp,
    },
    Session {
        session: SessionId,
        event: SessionEvent,
    },
    ColdStart {
        dataset: String,
        #[serde(flatten)]
        op: ColdStartOp,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub dataset: String,
    pub session: Session,
    /// Log sequence number of the commit behind each annotation.
    pub annotation_seqs: Vec<u64>,
    /// Log sequence number of the commit behind each pairwise judgment.
    pub judgment_seqs: Vec<u64>,
}

/// What applying a record produced, for the caller's response.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Done,
    Event(EventOutcome),
    Drawn(DrawOutcome),
    Reintroduced(Item),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub datasets: BTreeMap<String, Dataset>,
    pub sessions: BTreeMap<SessionId, SessionRecord>,
    pub drafts: BTreeMap<String, SeedDraft>,
    /// Sequence number of the last applied record; 0 when empty.
    pub seq: u64,
}

/// A validated state change, not yet visible.
#[derive(Debug)]
pub struct Change {
    seq: u64,
    dataset: Option<Dataset>,
    session: Option<(SessionId, SessionRecord)>,
    draft: Option<(String, Option<SeedDraft>)>,
    pub outcome: Outcome,
}

impl State {
    pub fn dataset(&self, id: &str) -> Result<&Dataset, StateError> {
        self.datasets.get(id).ok_or_else(|| StateError::NoDataset(id.to_string()))
    }

    pub fn session(&self, id: &SessionId) -> Result<&SessionRecord, StateError> {
        self.sessions.get(id).ok_or_else(|| StateError::NoSession(id.clone()))
    }

    pub fn draft(&self, dataset: &str) -> Result<&SeedDraft, StateError> {
        self.drafts.get(dataset).ok_or_else(|| StateError::NoDraft(dataset.to_string()))
    }

    /// Sessions of a dataset, ordered by id.
    pub fn sessions_of<'a>(
        &'a self,
        dataset: &'a str,
    ) -> impl Iterator<Item = (&'a SessionId, &'a SessionRecord)> + 'a {
        self.sessions.iter().filter(move |(_, r)| r.dataset == dataset)
    }

    /// Checks `record` against the current state and computes its effect
    /// without applying it.
    pub fn prepare(&self, record: &Record) -> Result<Change, StateError> {
        let seq = self.seq + 1;
        let mut change = Change { seq, dataset: None, session: None, draft: None, outcome: Outcome::Done };
        match record {
            Record::DatasetCreated { dataset } => {
                if self.datasets.contains_key(&dataset.id) {
                    return Err(StateError::DatasetExists(dataset.id.clone()));
                }
                let checked = Dataset::new(dataset.id.clone(), dataset.items.clone(), dataset.anchors.clone())?;
                change.dataset = Some(checked);
            }
            Record::SessionCreated { session, dataset, annotator, interface, items, probe, training, at } => {
                if self.sessions.contains_key(session) {
                    return Err(StateError::SessionExists(session.clone()));
                }
                let ds = self.dataset(dataset)?;
                let seq_items = items
                    .iter()
                    .map(|id| ds.item(id).cloned().ok_or_else(|| StateError::NoItem(id.clone())))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut config = SessionConfig::new(*interface, ds.anchors.clone());
                if !training {
                    config.training = None;
                }
                if *probe {
                    config.probe_plan = Some(ProbePlan::first_item_at_10_and_20());
                }
                let s = start_session(session.clone(), annotator.clone(), &seq_items, config, *at)?;
                change.session = Some((
                    session.clone(),
                    SessionRecord {
                        dataset: dataset.clone(),
                        session: s,
                        annotation_seqs: Vec::new(),
                        judgment_seqs: Vec::new(),
                    },
                ));
            }
            Record::Session { session, event } => {
                let mut rec = self.session(session)?.clone();
                let before = (rec.session.annotations().len(), rec.session.judgments().len());
                let outcome = rec.session.apply(event)?;
                let after = (rec.session.annotations().len(), rec.session.judgments().len());
                rec.annotation_seqs.extend(std::iter::repeat_n(seq, after.0 - before.0));
                rec.judgment_seqs.extend(std::iter::repeat_n(seq, after.1 - before.1));
                change.outcome = Outcome::Event(outcome);
                change.session = Some((session.clone(), rec));
            }
            Record::ColdStart { dataset, op } => self.prepare_cold_start(dataset, op, &mut change)?,
        }
        Ok(change)
    }

    fn prepare_cold_start(&self, dataset: &str, op: &ColdStartOp, change: &mut Change) -> Result<(), StateError> {
        let ds = self.dataset(dataset)?;
        let key = dataset.to_string();
        match op {
            ColdStartOp::Open { semantic } => {
                let semantic = if semantic.is_empty() { ds.anchors.semantic().to_vec() } else { semantic.clone() };
                goldilocks_core::model::validate_semantic(&semantic)
                    .map_err(|e| StateError::ColdStart(ColdStartError::Range(e)))?;
                change.draft = Some((key, Some(SeedDraft::new(&ds.items, semantic))));
            }
            ColdStartOp::Draw { n, seed } => {
                let mut d = self.draft(dataset)?.clone();
                change.outcome = Outcome::Drawn(d.draw(*n, *seed)?);
                change.draft = Some((key, Some(d)));
            }
            ColdStartOp::Drop { item } => {
                let mut d = self.draft(dataset)?.clone();
                d.drop_candidate(item)?;
                change.draft = Some((key, Some(d)));
            }
            ColdStartOp::Place { annotator, item, pos } => {
                let mut d = self.draft(dataset)?.clone();
                d.place(annotator, item, *pos)?;
                change.draft = Some((key, Some(d)));
            }
            ColdStartOp::Finalize { min_count } => {
                let pool = self.draft(dataset)?.finalize(*min_count)?;
                let mut next = ds.clone();
                next.anchors = pool;
                change.dataset = Some(next);
                change.draft = Some((key, None));
            }
            ColdStartOp::Reintroduce { item } => {
                let mut next = ds.clone();
                let it = reintroduce(&mut next.anchors, &ds.items, item)?;
                change.outcome = Outcome::Reintroduced(it);
                change.dataset = Some(next);
            }
        }
        Ok(())
    }

    /// Makes a prepared change visible.
    pub fn commit(&mut self, change: Change) -> Outcome {
        debug_assert_eq!(change.seq, self.seq + 1);
        self.seq = change.seq;
        if let Some(d) = change.dataset {
            self.datasets.insert(d.id.clone(), d);
        }
        if let Some((id, rec)) = change.session {
            self.sessions.insert(id, rec);
        }
        match change.draft {
            Some((k, Some(d))) => {
                self.drafts.insert(k, d);
            }
            Some((k, None)) => {
                self.drafts.remove(&k);
            }
            None => {}
        }
        change.outcome
    }

    pub fn apply(&mut self, record: &Record) -> Result<Outcome, StateError> {
        let change = self.prepare(record)?;
        Ok(self.commit(change))
    }
}
