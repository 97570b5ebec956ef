//! Export records and the corpus the analysis tools build from them.

use std::collections::BTreeMap;

use goldilocks_core::analysis::Corpus;
use goldilocks_core::model::{AnnotatorId, Bounds, ItemId, PairwiseJudgment, Relation, ScalePos, SessionId, Timestamp};
use goldilocks_core::protocol::Interface;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::{State, StateError};

pub const FORMAT_NAME: &str = "goldilocks-export";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing export header")]
    NoHeader,
    #[error("unsupported export format {0}")]
    Format(String),
    #[error("unknown export format {0:?}; expected jsonl or csv")]
    UnknownFormat(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session: SessionId,
    pub annotator: AnnotatorId,
    pub interface: Interface,
    /// The repeated item, for sessions with probe repeats.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_item: Option<ItemId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportHeader {
    pub format: String,
    pub version: u32,
    pub dataset: String,
    pub sessions: Vec<SessionInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub seq: u64,
    pub session: SessionId,
    pub annotator: AnnotatorId,
    pub item: ItemId,
    pub lower: f64,
    pub upper: f64,
    pub step_ms: [u64; 2],
    pub ts: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairwiseRecord {
    pub annotator: AnnotatorId,
    pub a: ItemId,
    pub b: ItemId,
    pub rel: Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Annotation(AnnotationRecord),
    Pairwise(PairwiseRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportData {
    pub header: ExportHeader,
    /// Ordered by the sequence number of the commit that produced them.
    pub entries: Vec<Entry>,
}

pub fn collect(state: &State, dataset: &str) -> Result<ExportData, ExportError> {
    state.dataset(dataset)?;
    let mut sessions = Vec::new();
    let mut keyed: Vec<((u64, usize, usize), Entry)> = Vec::new();
    for (k, (id, rec)) in state.sessions_of(dataset).enumerate() {
        let s = &rec.session;
        sessions.push(SessionInfo {
            session: id.clone(),
            annotator: s.annotator_id.clone(),
            interface: s.config.interface,
            probe_item: s.config.probe_plan.as_ref().map(|p| s.sequence()[p.source].id.clone()),
        });
        for (i, (a, seq)) in s.annotations().iter().zip(&rec.annotation_seqs).enumerate() {
            keyed.push((
                (*seq, k, i),
                Entry::Annotation(AnnotationRecord {
                    seq: *seq,
                    session: id.clone(),
                    annotator: a.annotator_id.clone(),
                    item: a.item_id.clone(),
                    lower: a.lower().get(),
                    upper: a.upper().get(),
                    step_ms: a.step_durations,
                    ts: a.created_at,
                }),
            ));
        }
        for (i, (j, seq)) in s.judgments().iter().zip(&rec.judgment_seqs).enumerate() {
            keyed.push((
                (*seq, k, i),
                Entry::Pairwise(PairwiseRecord {
                    annotator: j.annotator.clone(),
                    a: j.a.clone(),
                    b: j.b.clone(),
                    rel: j.rel,
                }),
            ));
        }
    }
    // one commit yields entries of a single session, so this order is total
    keyed.sort_by_key(|(k, _)| *k);
    Ok(ExportData {
        header: ExportHeader { format: FORMAT_NAME.into(), version: FORMAT_VERSION, dataset: dataset.into(), sessions },
        entries: keyed.into_iter().map(|(_, e)| e).collect(),
    })
}

pub fn to_jsonl(data: &ExportData) -> String {
    let mut out = serde_json::to_string(&data.header).expect("header serializes");
    out.push('\n');
    for e in &data.entries {
        out.push_str(&serde_json::to_string(e).expect("entry serializes"));
        out.push('\n');
    }
    out
}

const CSV_HEADER: [&str; 13] = [
    "kind",
    "seq",
    "session",
    "annotator",
    "item",
    "lower",
    "upper",
    "step_ms_lower",
    "step_ms_upper",
    "ts",
    "a",
    "b",
    "rel",
];

/// One row per entry; columns that do not apply are empty.
pub fn to_csv(data: &ExportData) -> Result<String, ExportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for e in &data.entries {
        match e {
            Entry::Annotation(r) => w.write_record([
                "annotation".to_string(),
                r.seq.to_string(),
                r.session.to_string(),
                r.annotator.to_string(),
                r.item.to_string(),
                r.lower.to_string(),
                r.upper.to_string(),
                r.step_ms[0].to_string(),
                r.step_ms[1].to_string(),
                r.ts.to_string(),
                String::new(),
                String::new(),
                String::new(),
            ])?,
            Entry::Pairwise(p) => {
                let rel = serde_json::to_value(p.rel).expect("relation serializes");
                w.write_record([
                    "pairwise",
                    "",
                    "",
                    p.annotator.as_str(),
                    "",
                    "",
                    "",
                    "",
                    "",
                    "",
                    p.a.as_str(),
                    p.b.as_str(),
                    rel.as_str().unwrap_or_default(),
                ])?
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| ExportError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

pub fn render(data: &ExportData, format: &str) -> Result<String, ExportError> {
    match format {
        "jsonl" | "ndjson" => Ok(to_jsonl(data)),
        "csv" => to_csv(data),
        other => Err(ExportError::UnknownFormat(other.to_string())),
    }
}

pub fn parse_jsonl(text: &str) -> Result<ExportData, ExportError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or(ExportError::NoHeader)?;
    let header: ExportHeader =
        serde_json::from_str(first).map_err(|e| ExportError::Parse { line: 1, message: e.to_string() })?;
    if header.format != FORMAT_NAME || header.version != FORMAT_VERSION {
        return Err(ExportError::Format(format!("{} v{}", header.format, header.version)));
    }
    let entries = lines
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| ExportError::Parse { line: n + 1, message: e.to_string() }))
        .collect::<Result<Vec<Entry>, _>>()?;
    Ok(ExportData { header, entries })
}

/// Sorts export entries into the analysis corpus. Range sessions supply
/// ranges, single-value sessions supply ratings, and a session's repeated
/// probe item supplies its self-consistency attempts.
pub fn corpus(data: &ExportData) -> Result<Corpus, ExportError> {
    let info: BTreeMap<&SessionId, &SessionInfo> = data.header.sessions.iter().map(|s| (&s.session, s)).collect();
    let mut c = Corpus::default();
    let mut probes: BTreeMap<&SessionId, Vec<f64>> = BTreeMap::new();
    for (n, e) in data.entries.iter().enumerate() {
        match e {
            Entry::Annotation(r) => {
                let bad = |m: String| ExportError::Parse { line: n + 2, message: m };
                let s = info.get(&r.session).ok_or_else(|| bad(format!("unknown session {}", r.session)))?;
                let bounds = Bounds::new(r.lower, r.upper).map_err(|e| bad(e.to_string()))?;
                match s.interface {
                    Interface::RHa => {
                        c.add_range(r.item.clone(), r.annotator.clone(), bounds);
                    }
                    Interface::SvSa | Interface::SvEa => {
                        c.add_rating(r.item.clone(), r.annotator.clone(), ScalePos::clamped(r.lower));
                    }
                    Interface::Pairwise => return Err(bad("annotation record in a pairwise session".into())),
                }
                if s.probe_item.as_ref() == Some(&r.item) {
                    probes.entry(&s.session).or_default().push(bounds.midpoint());
                }
            }
            Entry::Pairwise(p) => {
                let j = PairwiseJudgment::new(p.annotator.clone(), p.a.clone(), p.b.clone(), p.rel)
                    .map_err(|e| ExportError::Parse { line: n + 2, message: e.to_string() })?;
                c.judgments.push(j);
            }
        }
    }
    c.probes = data
        .header
        .sessions
        .iter()
        .filter(|s| s.probe_item.is_some())
        .map(|s| (s.session.clone(), probes.remove(&s.session).unwrap_or_default()))
        .collect();
    Ok(c)
}
