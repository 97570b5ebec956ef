//! Domain types shared by every part of the platform.
//!
//! All positions live on the closed unit interval. Discrete scales (e.g. a
//! 7-point Likert scale) are mapped onto it with [`ScalePos::from_level`].

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Errors raised when constructing domain values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("value {0} is not finite")]
    NotFinite(f64),
    #[error("value {0} lies outside the unit interval")]
    OutOfRange(f64),
    #[error("invalid range: {0}")]
    Range(#[from] RangeViolation),
    #[error("item body must not be empty (item {0})")]
    EmptyBody(String),
    #[error("identifier must not be empty")]
    EmptyId,
    #[error("pairwise judgment compares item {0} with itself")]
    SelfComparison(String),
    #[error("relationship masses must be non-negative and sum to 1 (got {0}, {1}, {2})")]
    BadDistribution(f64, f64, f64),
    #[error("semantic anchor positions must be strictly increasing")]
    UnorderedSemantic,
    #[error("level {level} is not within 1..={levels}")]
    BadLevel { level: u32, levels: u32 },
}

/// A position on the closed unit interval `[0, 1]`.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct ScalePos(f64);

impl ScalePos {
    pub const MIN: ScalePos = ScalePos(0.0);
    pub const MAX: ScalePos = ScalePos(1.0);

    pub fn new(value: f64) -> Result<Self, ModelError> {
        if !value.is_finite() {
            return Err(ModelError::NotFinite(value));
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(ModelError::OutOfRange(value));
        }
        Ok(ScalePos(value))
    }

    /// Clamps any finite value onto the scale. NaN maps to 0.
    pub fn clamped(value: f64) -> Self {
        if value.is_nan() {
            ScalePos(0.0)
        } else {
            ScalePos(value.clamp(0.0, 1.0))
        }
    }

    /// Maps a 1-based level of an `levels`-point scale onto `[0, 1]`.
    pub fn from_level(level: u32, levels: u32) -> Result<Self, ModelError> {
        if levels < 2 || level < 1 || level > levels {
            return Err(ModelError::BadLevel { level, levels });
        }
        Ok(ScalePos(f64::from(level - 1) / f64::from(levels - 1)))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Debug for ScalePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ScalePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl TryFrom<f64> for ScalePos {
    type Error = ModelError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        ScalePos::new(value)
    }
}

impl From<ScalePos> for f64 {
    fn from(p: ScalePos) -> f64 {
        p.0
    }
}

impl Serialize for ScalePos {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for ScalePos {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        ScalePos::new(v).map_err(serde::de::Error::custom)
    }
}

macro_rules! string_id {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{:?}", self.0)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

string_id!(
    /// Stable identity of an annotatable item.
    ItemId
);
string_id!(
    /// Opaque annotator token.
    AnnotatorId
);
string_id!(SessionId);

/// Milliseconds since the Unix epoch, UTC.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const fn from_millis(ms: i64) -> Self {
        Timestamp(ms)
    }

    pub fn now() -> Self {
        Timestamp(Utc::now().timestamp_millis())
    }

    pub fn millis(self) -> i64 {
        self.0
    }

    /// Elapsed milliseconds since `earlier`, saturating at zero.
    pub fn since(self, earlier: Timestamp) -> u64 {
        u64::try_from(self.0.saturating_sub(earlier.0)).unwrap_or(0)
    }

    pub fn to_datetime(self) -> DateTime<Utc> {
        Utc.timestamp_millis_opt(self.0).single().unwrap_or_default()
    }
}

impl fmt::Debug for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_datetime().to_rfc3339_opts(SecondsFormat::Millis, true))
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let dt = DateTime::parse_from_rfc3339(&s).map_err(serde::de::Error::custom)?;
        Ok(Timestamp(dt.with_timezone(&Utc).timestamp_millis()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Text,
    Image,
}

/// An annotatable unit. Image items carry a locator in `body`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: ItemId,
    pub kind: ItemKind,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<BTreeMap<String, serde_json::Value>>,
}

impl Item {
    pub fn new(id: impl Into<ItemId>, kind: ItemKind, body: impl Into<String>) -> Result<Self, ModelError> {
        let item = Item { id: id.into(), kind, body: body.into(), meta: None };
        item.validate()?;
        Ok(item)
    }

    pub fn text(id: impl Into<ItemId>, body: impl Into<String>) -> Result<Self, ModelError> {
        Item::new(id, ItemKind::Text, body)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.id.as_str().is_empty() {
            return Err(ModelError::EmptyId);
        }
        if self.body.is_empty() {
            return Err(ModelError::EmptyBody(self.id.to_string()));
        }
        Ok(())
    }
}

/// Which constraint a candidate range broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RangeViolation {
    #[error("bounds must be finite")]
    NotFinite,
    #[error("lower bound is outside [0, 1]")]
    LowerOutOfRange,
    #[error("upper bound is outside [0, 1]")]
    UpperOutOfRange,
    #[error("upper bound is below lower bound")]
    Order,
}

/// Accepts `lower` and `upper` iff `0 <= lower <= upper <= 1`.
pub fn validate_range(lower: f64, upper: f64) -> Result<(), RangeViolation> {
    if !lower.is_finite() || !upper.is_finite() {
        return Err(RangeViolation::NotFinite);
    }
    if !(0.0..=1.0).contains(&lower) {
        return Err(RangeViolation::LowerOutOfRange);
    }
    if !(0.0..=1.0).contains(&upper) {
        return Err(RangeViolation::UpperOutOfRange);
    }
    if upper < lower {
        return Err(RangeViolation::Order);
    }
    Ok(())
}

/// A closed interval on the scale. `lower == upper` expresses full certainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct Bounds {
    lower: ScalePos,
    upper: ScalePos,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self, RangeViolation> {
        validate_range(lower, upper)?;
        Ok(Bounds { lower: ScalePos(lower), upper: ScalePos(upper) })
    }

    pub fn point(p: ScalePos) -> Self {
        Bounds { lower: p, upper: p }
    }

    pub fn lower(&self) -> ScalePos {
        self.lower
    }

    pub fn upper(&self) -> ScalePos {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper.0 - self.lower.0
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower.0 + self.upper.0)
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }
}

impl TryFrom<(f64, f64)> for Bounds {
    type Error = RangeViolation;

    fn try_from((l, u): (f64, f64)) -> Result<Self, Self::Error> {
        Bounds::new(l, u)
    }
}

impl From<Bounds> for (f64, f64) {
    fn from(b: Bounds) -> Self {
        (b.lower.0, b.upper.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointAnnotation {
    pub item_id: ItemId,
    pub annotator_id: AnnotatorId,
    pub value: ScalePos,
    pub created_at: Timestamp,
}

/// One annotator's `[lower, upper]` placement of an item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeAnnotation {
    pub item_id: ItemId,
    pub annotator_id: AnnotatorId,
    pub bounds: Bounds,
    /// Elapsed milliseconds spent on the lower and upper step.
    pub step_durations: [u64; 2],
    pub created_at: Timestamp,
}

impl RangeAnnotation {
    pub fn lower(&self) -> ScalePos {
        self.bounds.lower()
    }

    pub fn upper(&self) -> ScalePos {
        self.bounds.upper()
    }
}

impl From<PointAnnotation> for RangeAnnotation {
    fn from(p: PointAnnotation) -> Self {
        RangeAnnotation {
            item_id: p.item_id,
            annotator_id: p.annotator_id,
            bounds: Bounds::point(p.value),
            step_durations: [0, 0],
            created_at: p.created_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticAnchor {
    pub position: ScalePos,
    pub label: String,
}

/// Checks that semantic anchor positions strictly increase.
pub fn validate_semantic(anchors: &[SemanticAnchor]) -> Result<(), ModelError> {
    if anchors.windows(2).all(|w| w[0].position < w[1].position) {
        Ok(())
    } else {
        Err(ModelError::UnorderedSemantic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorOrigin {
    Seed,
    SessionSelf,
    Imported,
}

/// A previously annotated item used as a reference on the scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleAnchor {
    pub item_id: ItemId,
    pub bounds: Bounds,
    pub origin: AnchorOrigin,
}

impl ExampleAnchor {
    pub fn new(item_id: impl Into<ItemId>, bounds: Bounds, origin: AnchorOrigin) -> Self {
        ExampleAnchor { item_id: item_id.into(), bounds, origin }
    }

    pub fn seed(item_id: impl Into<ItemId>, at: ScalePos) -> Self {
        ExampleAnchor::new(item_id, Bounds::point(at), AnchorOrigin::Seed)
    }

    pub fn lower(&self) -> ScalePos {
        self.bounds.lower()
    }

    pub fn upper(&self) -> ScalePos {
        self.bounds.upper()
    }
}

/// Pairwise relation of item `a` to item `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Lt,
    Eq,
    Gt,
}

impl Relation {
    pub const ALL: [Relation; 3] = [Relation::Lt, Relation::Eq, Relation::Gt];

    /// The relation of `b` to `a`.
    pub fn flip(self) -> Relation {
        match self {
            Relation::Lt => Relation::Gt,
            Relation::Eq => Relation::Eq,
            Relation::Gt => Relation::Lt,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Relation::Lt => 0,
            Relation::Eq => 1,
            Relation::Gt => 2,
        }
    }
}

pub fn flip_relation(rel: Relation) -> Relation {
    rel.flip()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseJudgment {
    pub annotator: AnnotatorId,
    pub a: ItemId,
    pub b: ItemId,
    pub rel: Relation,
}

impl PairwiseJudgment {
    pub fn new(
        annotator: impl Into<AnnotatorId>,
        a: impl Into<ItemId>,
        b: impl Into<ItemId>,
        rel: Relation,
    ) -> Result<Self, ModelError> {
        let (a, b) = (a.into(), b.into());
        if a == b {
            return Err(ModelError::SelfComparison(a.to_string()));
        }
        Ok(PairwiseJudgment { annotator: annotator.into(), a, b, rel })
    }

    /// The judgment oriented as `(a, b)`, or `None` if it concerns another pair.
    pub fn oriented(&self, a: &ItemId, b: &ItemId) -> Option<Relation> {
        if &self.a == a && &self.b == b {
            Some(self.rel)
        } else if &self.a == b && &self.b == a {
            Some(self.rel.flip())
        } else {
            None
        }
    }
}

const MASS_TOLERANCE: f64 = 1e-9;

/// Probability mass over `{LT, EQ, GT}` for an ordered item pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationshipDistribution {
    pub p_lt: f64,
    pub p_eq: f64,
    pub p_gt: f64,
}

impl RelationshipDistribution {
    pub fn new(p_lt: f64, p_eq: f64, p_gt: f64) -> Result<Self, ModelError> {
        let ok = [p_lt, p_eq, p_gt].iter().all(|p| p.is_finite() && *p >= 0.0)
            && (p_lt + p_eq + p_gt - 1.0).abs() <= MASS_TOLERANCE;
        if ok {
            Ok(RelationshipDistribution { p_lt, p_eq, p_gt })
        } else {
            Err(ModelError::BadDistribution(p_lt, p_eq, p_gt))
        }
    }

    /// All mass on one relation.
    pub fn point(rel: Relation) -> Self {
        let mut m = [0.0; 3];
        m[rel.index()] = 1.0;
        RelationshipDistribution { p_lt: m[0], p_eq: m[1], p_gt: m[2] }
    }

    /// Proportions from tallies. Returns `None` when all counts are zero.
    pub fn from_counts(counts: [usize; 3]) -> Option<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return None;
        }
        let n = total as f64;
        Some(RelationshipDistribution {
            p_lt: counts[0] as f64 / n,
            p_eq: counts[1] as f64 / n,
            p_gt: counts[2] as f64 / n,
        })
    }

    pub fn masses(&self) -> [f64; 3] {
        [self.p_lt, self.p_eq, self.p_gt]
    }

    pub fn mass(&self, rel: Relation) -> f64 {
        self.masses()[rel.index()]
    }

    /// Same distribution seen from `(b, a)`.
    pub fn flipped(&self) -> Self {
        RelationshipDistribution { p_lt: self.p_gt, p_eq: self.p_eq, p_gt: self.p_lt }
    }

    /// The relation carrying the most mass. Ties resolve toward `Eq`; between
    /// `Lt` and `Gt` alone they also resolve to `Eq`. The flag reports a tie.
    pub fn majority(&self) -> (Relation, bool) {
        let m = self.masses();
        let best = m.iter().cloned().fold(f64::MIN, f64::max);
        let winners: Vec<Relation> = Relation::ALL.into_iter().filter(|r| m[r.index()] == best).collect();
        if winners.len() == 1 {
            (winners[0], false)
        } else {
            (Relation::Eq, true)
        }
    }
}
