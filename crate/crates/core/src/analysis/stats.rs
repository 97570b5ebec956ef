//! Descriptive statistics: intervals, disagreement, scale use, self-consistency
//! and the range-size versus CI-width comparison.

use serde::{Deserialize, Serialize};

use crate::model::{Bounds, Relation, RelationshipDistribution, SessionId};

use super::AnalysisError;

/// Laplace smoothing term for the self-disagreement ratio.
pub const EPSILON: f64 = 1e-8;
/// Normal-approximation multiplier for a 95% interval.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn constant(values: &[f64]) -> Option<f64> {
    let first = *values.first()?;
    values.iter().all(|v| *v == first).then_some(first)
}

/// Exact on constant input, where summation would drift by an ulp.
pub fn mean(values: &[f64]) -> f64 {
    constant(values).unwrap_or_else(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample standard deviation with the n−1 denominator.
pub fn sample_sd(values: &[f64]) -> Result<f64, AnalysisError> {
    if values.len() < 2 {
        return Err(AnalysisError::Insufficient);
    }
    if constant(values).is_some() {
        return Ok(0.0);
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Ok((ss / (values.len() - 1) as f64).sqrt())
}

/// Standard error of the mean.
pub fn disagreement_se(values: &[f64]) -> Result<f64, AnalysisError> {
    Ok(sample_sd(values)? / (values.len() as f64).sqrt())
}

pub fn confidence_interval(values: &[f64]) -> Result<ConfidenceInterval, AnalysisError> {
    let se = disagreement_se(values)?;
    let m = mean(values);
    Ok(ConfidenceInterval { lower: m - Z_95 * se, upper: m + Z_95 * se })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Utilization {
    pub avg_min: f64,
    pub avg_max: f64,
    pub span: f64,
}

/// Mean of per-annotator minima and maxima. Annotators with no ratings are
/// skipped.
pub fn scale_utilization<'a, I>(per_annotator: I) -> Result<Utilization, AnalysisError>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let (mut lo, mut hi, mut n) = (0.0, 0.0, 0usize);
    for vals in per_annotator {
        if vals.is_empty() {
            continue;
        }
        lo += vals.iter().copied().fold(f64::INFINITY, f64::min);
        hi += vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        n += 1;
    }
    if n == 0 {
        return Err(AnalysisError::NoData);
    }
    let (avg_min, avg_max) = (lo / n as f64, hi / n as f64);
    Ok(Utilization { avg_min, avg_max, span: avg_max - avg_min })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfConsistencyRecord {
    pub session: SessionId,
    pub delta1: f64,
    pub delta2: f64,
    pub ratio: f64,
}

/// Needs the first three attempts at the probe item; extra attempts are ignored.
pub fn self_consistency(session: SessionId, attempts: &[f64]) -> Result<SelfConsistencyRecord, AnalysisError> {
    let [v0, v1, v2] = match attempts {
        [a, b, c, ..] => [*a, *b, *c],
        _ => return Err(AnalysisError::Incomplete),
    };
    let delta1 = (v1 - v0).abs();
    let delta2 = (v2 - v1).abs();
    Ok(SelfConsistencyRecord { session, delta1, delta2, ratio: (delta2 + EPSILON) / (delta1 + EPSILON) })
}

/// The `ceil(0.3 n)` records with the largest Δ1, largest first. Equal Δ1
/// keeps input order.
pub fn top_uncertain(records: &[SelfConsistencyRecord], fraction: f64) -> Vec<SelfConsistencyRecord> {
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| b.delta1.total_cmp(&a.delta1));
    let k = (fraction * records.len() as f64).ceil() as usize;
    sorted.truncate(k.min(records.len()));
    sorted
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyComparison {
    pub range_size: Vec<f64>,
    pub ci_width: Vec<f64>,
    /// `None` when either series has zero variance.
    pub r_squared: Option<f64>,
}

/// Per-item mean range width against single-value CI width. Each entry pairs
/// an item's ranges with its ratings.
pub fn uncertainty_comparison(items: &[(Vec<Bounds>, Vec<f64>)]) -> Result<UncertaintyComparison, AnalysisError> {
    if items.len() < 3 {
        return Err(AnalysisError::Insufficient);
    }
    let mut range_size = Vec::with_capacity(items.len());
    let mut ci_width = Vec::with_capacity(items.len());
    for (ranges, ratings) in items {
        if ranges.is_empty() {
            return Err(AnalysisError::NoData);
        }
        range_size.push(ranges.iter().map(Bounds::width).sum::<f64>() / ranges.len() as f64);
        ci_width.push(confidence_interval(ratings)?.width());
    }
    let r_squared = r_squared(&range_size, &ci_width);
    Ok(UncertaintyComparison { range_size, ci_width, r_squared })
}

/// Coefficient of determination of the least-squares line y ~ x.
pub fn r_squared(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy * sxy / (sxx * syy)).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverestimateRate {
    pub rate: f64,
    /// Pairs whose ground-truth majority is LT or GT.
    pub distinguished: usize,
    pub called_eq: usize,
    /// Pairs where a majority was decided by a tie.
    pub ties: usize,
}

/// Among pairs whose ground truth majority is LT or GT, the fraction the
/// method assigns EQ by majority mass.
pub fn overestimate_rate(
    pairs: &[(RelationshipDistribution, RelationshipDistribution)],
) -> Result<OverestimateRate, AnalysisError> {
    let (mut distinguished, mut called_eq, mut ties) = (0, 0, 0);
    for (truth, method) in pairs {
        let (t, t_tie) = truth.majority();
        if t == Relation::Eq {
            ties += t_tie as usize;
            continue;
        }
        distinguished += 1;
        let (m, m_tie) = method.majority();
        ties += m_tie as usize;
        called_eq += (m == Relation::Eq) as usize;
    }
    if distinguished == 0 {
        return Err(AnalysisError::NoData);
    }
    Ok(OverestimateRate { rate: called_eq as f64 / distinguished as f64, distinguished, called_eq, ties })
}
