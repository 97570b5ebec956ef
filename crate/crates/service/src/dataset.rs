//! Datasets and the two ingest formats: newline-delimited items and a JSON
//! anchors file.

use std::collections::BTreeSet;

use goldilocks_core::anchors::AnchorPool;
use goldilocks_core::model::{AnchorOrigin, Bounds, ExampleAnchor, Item, ItemId, ScalePos, SemanticAnchor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("line {line}: duplicate item id {id:?}")]
    Duplicate { line: usize, id: String },
    #[error("anchors file: {0}")]
    Anchors(String),
    #[error("invalid dataset id {0:?}")]
    BadId(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub id: String,
    pub items: Vec<Item>,
    /// Seed example anchors and semantic labels.
    pub anchors: AnchorPool,
}

impl Dataset {
    pub fn new(id: impl Into<String>, items: Vec<Item>, anchors: AnchorPool) -> Result<Self, IngestError> {
        let id = id.into();
        if !valid_id(&id) {
            return Err(IngestError::BadId(id));
        }
        let mut seen = BTreeSet::new();
        for (n, item) in items.iter().enumerate() {
            item.validate().map_err(|e| IngestError::Line { line: n + 1, message: e.to_string() })?;
            if !seen.insert(&item.id) {
                return Err(IngestError::Duplicate { line: n + 1, id: item.id.to_string() });
            }
        }
        for a in anchors.anchors() {
            if !seen.contains(&a.item_id) {
                return Err(IngestError::Anchors(format!("example {} is not a dataset item", a.item_id)));
            }
        }
        Ok(Dataset { id, items, anchors })
    }

    pub fn item(&self, id: &ItemId) -> Option<&Item> {
        self.items.iter().find(|i| &i.id == id)
    }

    /// Items still to be annotated: everything not serving as an anchor.
    pub fn annotatable(&self) -> Vec<Item> {
        self.items.iter().filter(|i| !self.anchors.contains(&i.id)).cloned().collect()
    }

    /// Consecutive slices of the annotatable items.
    pub fn partitions(&self, size: usize) -> Vec<Vec<Item>> {
        self.annotatable().chunks(size.max(1)).map(<[Item]>::to_vec).collect()
    }
}

/// Ids travel in URL paths and file names.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

/// Parses newline-delimited item records. Blank lines are skipped; errors
/// name the 1-based line.
pub fn parse_items(text: &str) -> Result<Vec<Item>, IngestError> {
    let mut items = Vec::new();
    let mut seen = BTreeSet::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let item: Item =
            serde_json::from_str(line).map_err(|e| IngestError::Line { line: line_no, message: e.to_string() })?;
        item.validate().map_err(|e| IngestError::Line { line: line_no, message: e.to_string() })?;
        if !seen.insert(item.id.clone()) {
            return Err(IngestError::Duplicate { line: line_no, id: item.id.to_string() });
        }
        items.push(item);
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticEntry {
    pub pos: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleEntry {
    pub item_id: String,
    pub lower: f64,
    pub upper: f64,
}

/// The anchors file. With `levels` set, semantic positions are 1-based
/// levels of a discrete scale and are mapped onto `[0, 1]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorsFile {
    #[serde(default)]
    pub semantic: Vec<SemanticEntry>,
    #[serde(default)]
    pub examples: Vec<ExampleEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<u32>,
}

impl AnchorsFile {
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        serde_json::from_str(text).map_err(|e| IngestError::Anchors(e.to_string()))
    }

    pub fn to_pool(&self) -> Result<AnchorPool, IngestError> {
        let err = |e: &dyn std::fmt::Display| IngestError::Anchors(e.to_string());
        let semantic = self
            .semantic
            .iter()
            .map(|s| {
                let position = match self.levels {
                    Some(levels) => {
                        if s.pos.fract() != 0.0 || s.pos < 1.0 {
                            return Err(IngestError::Anchors(format!("level {} is not a positive integer", s.pos)));
                        }
                        ScalePos::from_level(s.pos as u32, levels).map_err(|e| err(&e))?
                    }
                    None => ScalePos::new(s.pos).map_err(|e| err(&e))?,
                };
                Ok(SemanticAnchor { position, label: s.label.clone() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let examples = self
            .examples
            .iter()
            .map(|e| {
                let bounds = Bounds::new(e.lower, e.upper).map_err(|v| err(&v))?;
                Ok(ExampleAnchor::new(e.item_id.as_str(), bounds, AnchorOrigin::Seed))
            })
            .collect::<Result<Vec<_>, IngestError>>()?;
        AnchorPool::new(examples, semantic).map_err(|e| err(&e))
    }
}

/// Full ingest of the two files into a dataset.
pub fn ingest(id: &str, items_text: &str, anchors_text: Option<&str>) -> Result<Dataset, IngestError> {
    let items = parse_items(items_text)?;
    let anchors = match anchors_text {
        Some(t) => AnchorsFile::parse(t)?.to_pool()?,
        None => AnchorPool::default(),
    };
    Dataset::new(id, items, anchors)
}
