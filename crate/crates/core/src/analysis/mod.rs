//! Metrics over collected annotations.

mod relations;
mod report;
mod stats;

pub use relations::*;
pub use report::*;
pub use stats::*;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("no data")]
    NoData,
    #[error("insufficient data")]
    Insufficient,
    #[error("incomplete probe attempts")]
    Incomplete,
}

/// A metric that either computed or could not be, with the reason inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Metric<T> {
    Ok { value: T },
    NotComputable { reason: String },
}

impl<T> Metric<T> {
    pub fn not_computable(reason: impl Into<String>) -> Self {
        Metric::NotComputable { reason: reason.into() }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Metric::Ok { value } => Some(value),
            Metric::NotComputable { .. } => None,
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, Metric::Ok { .. })
    }
}

impl<T> From<Result<T, AnalysisError>> for Metric<T> {
    fn from(r: Result<T, AnalysisError>) -> Self {
        match r {
            Ok(value) => Metric::Ok { value },
            Err(e) => Metric::not_computable(e.to_string()),
        }
    }
}
