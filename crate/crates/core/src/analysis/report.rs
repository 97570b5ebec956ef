//! The full analysis pipeline over a corpus of collected annotations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::model::{AnnotatorId, Bounds, ItemId, PairwiseJudgment, RelationshipDistribution, ScalePos, SessionId};

use super::relations::*;
use super::stats::*;
use super::{AnalysisError, Metric};

/// Fraction of probe sessions treated as most uncertain.
pub const TOP_UNCERTAIN_FRACTION: f64 = 0.3;

/// Everything the metrics consume. Only the first range and the first single
/// value per (item, annotator) are kept; later attempts at a probe item feed
/// self-consistency instead.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub ranges: BTreeMap<ItemId, Ranges>,
    pub ratings: BTreeMap<ItemId, Ratings>,
    pub judgments: Vec<PairwiseJudgment>,
    pub probes: Vec<(SessionId, Vec<f64>)>,
}

impl Corpus {
    /// Returns false if the annotator already had a range for the item.
    pub fn add_range(&mut self, item: ItemId, annotator: AnnotatorId, bounds: Bounds) -> bool {
        let per = self.ranges.entry(item).or_default();
        if per.contains_key(&annotator) {
            return false;
        }
        per.insert(annotator, bounds);
        true
    }

    pub fn add_rating(&mut self, item: ItemId, annotator: AnnotatorId, value: ScalePos) -> bool {
        let per = self.ratings.entry(item).or_default();
        if per.contains_key(&annotator) {
            return false;
        }
        per.insert(annotator, value);
        true
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty() && self.ratings.is_empty() && self.judgments.is_empty() && self.probes.is_empty()
    }

    /// Unordered pairs with at least one judgment, as `(a, b)` with `a < b`.
    pub fn judged_pairs(&self) -> Vec<(ItemId, ItemId)> {
        let set: BTreeSet<(ItemId, ItemId)> = self
            .judgments
            .iter()
            .map(|j| if j.a < j.b { (j.a.clone(), j.b.clone()) } else { (j.b.clone(), j.a.clone()) })
            .collect();
        set.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub a: ItemId,
    pub b: ItemId,
    pub truth: RelationshipDistribution,
    pub range: Option<RelationshipDistribution>,
    pub direct: Option<RelationshipDistribution>,
    pub infer: Option<RelationshipDistribution>,
    pub wd_range: Option<f64>,
    pub wd_direct: Option<f64>,
    pub wd_infer: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub mean_wd: Option<f64>,
    pub pairs: usize,
    /// Judged pairs this method had no data for.
    pub dropped: usize,
    pub overestimate: Option<OverestimateRate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodComparison {
    pub pairs: Vec<PairComparison>,
    pub range: MethodSummary,
    pub direct: MethodSummary,
    pub infer: MethodSummary,
}

pub fn compare_pair(corpus: &Corpus, a: &ItemId, b: &ItemId) -> Result<PairComparison, AnalysisError> {
    let truth = ground_truth_distribution(a, b, &corpus.judgments)?;
    let range = match (corpus.ranges.get(a), corpus.ranges.get(b)) {
        (Some(ra), Some(rb)) => range_distribution(ra, rb).ok(),
        _ => None,
    };
    let (direct, infer) = match (corpus.ratings.get(a), corpus.ratings.get(b)) {
        (Some(ra), Some(rb)) => {
            let va: Vec<f64> = ra.values().map(|v| v.get()).collect();
            let vb: Vec<f64> = rb.values().map(|v| v.get()).collect();
            (direct_distribution(ra, rb).ok(), infer_distribution(&va, &vb).ok())
        }
        _ => (None, None),
    };
    let wd = |d: &Option<RelationshipDistribution>| d.as_ref().map(|d| wasserstein_distance(d, &truth));
    Ok(PairComparison {
        a: a.clone(),
        b: b.clone(),
        wd_range: wd(&range),
        wd_direct: wd(&direct),
        wd_infer: wd(&infer),
        truth,
        range,
        direct,
        infer,
    })
}

fn summarize(
    pairs: &[PairComparison],
    pick: impl Fn(&PairComparison) -> (Option<RelationshipDistribution>, Option<f64>),
) -> MethodSummary {
    let mut sum = 0.0;
    let mut used = Vec::new();
    for p in pairs {
        if let (Some(d), Some(w)) = pick(p) {
            sum += w;
            used.push((p.truth, d));
        }
    }
    MethodSummary {
        mean_wd: (!used.is_empty()).then(|| sum / used.len() as f64),
        pairs: used.len(),
        dropped: pairs.len() - used.len(),
        overestimate: overestimate_rate(&used).ok(),
    }
}

/// Recovers each judged pair's distribution by every method and scores it
/// against the pairwise ground truth.
pub fn compare_methods(corpus: &Corpus, exec: Execution) -> Result<MethodComparison, AnalysisError> {
    let keys = corpus.judged_pairs();
    if keys.is_empty() {
        return Err(AnalysisError::NoData);
    }
    let pairs: Vec<PairComparison> =
        exec.map(&keys, |(a, b)| compare_pair(corpus, a, b)).into_iter().collect::<Result<_, _>>()?;
    Ok(MethodComparison {
        range: summarize(&pairs, |p| (p.range, p.wd_range)),
        direct: summarize(&pairs, |p| (p.direct, p.wd_direct)),
        infer: summarize(&pairs, |p| (p.infer, p.wd_infer)),
        pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemMetrics {
    pub rating_mean: Metric<f64>,
    pub rating_se: Metric<f64>,
    pub lower_se: Metric<f64>,
    pub upper_se: Metric<f64>,
    pub mean_range_width: Metric<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfConsistencySummary {
    pub records: Vec<SelfConsistencyRecord>,
    pub top_uncertain: Vec<SelfConsistencyRecord>,
    pub mean_delta1: f64,
    pub mean_delta2: f64,
    pub top_mean_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub items: BTreeMap<ItemId, ItemMetrics>,
    pub mean_rating_se: Metric<f64>,
    pub utilization: Metric<Utilization>,
    pub methods: Metric<MethodComparison>,
    pub self_consistency: Metric<SelfConsistencySummary>,
    pub uncertainty: Metric<UncertaintyComparison>,
}

fn item_metrics(ranges: Option<&Ranges>, ratings: Option<&Ratings>) -> ItemMetrics {
    let vals: Vec<f64> = ratings.map(|r| r.values().map(|v| v.get()).collect()).unwrap_or_default();
    let rb: Vec<Bounds> = ranges.map(|r| r.values().copied().collect()).unwrap_or_default();
    let lowers: Vec<f64> = rb.iter().map(|b| b.lower().get()).collect();
    let uppers: Vec<f64> = rb.iter().map(|b| b.upper().get()).collect();
    ItemMetrics {
        rating_mean: if vals.is_empty() { Err(AnalysisError::NoData) } else { Ok(mean(&vals)) }.into(),
        rating_se: disagreement_se(&vals).into(),
        lower_se: disagreement_se(&lowers).into(),
        upper_se: disagreement_se(&uppers).into(),
        mean_range_width: if rb.is_empty() {
            Err(AnalysisError::NoData)
        } else {
            Ok(rb.iter().map(Bounds::width).sum::<f64>() / rb.len() as f64)
        }
        .into(),
    }
}

fn self_consistency_summary(probes: &[(SessionId, Vec<f64>)]) -> Result<SelfConsistencySummary, AnalysisError> {
    let records: Vec<SelfConsistencyRecord> =
        probes.iter().filter_map(|(s, v)| self_consistency(s.clone(), v).ok()).collect();
    if records.is_empty() {
        return Err(if probes.is_empty() { AnalysisError::NoData } else { AnalysisError::Incomplete });
    }
    let top = top_uncertain(&records, TOP_UNCERTAIN_FRACTION);
    let n = records.len() as f64;
    Ok(SelfConsistencySummary {
        mean_delta1: records.iter().map(|r| r.delta1).sum::<f64>() / n,
        mean_delta2: records.iter().map(|r| r.delta2).sum::<f64>() / n,
        top_mean_ratio: top.iter().map(|r| r.ratio).sum::<f64>() / top.len() as f64,
        records,
        top_uncertain: top,
    })
}

/// Runs every metric; ones without enough data are reported as not computable.
pub fn analyze(corpus: &Corpus, exec: Execution) -> AnalysisReport {
    let ids: BTreeSet<&ItemId> = corpus.ranges.keys().chain(corpus.ratings.keys()).collect();
    let items: BTreeMap<ItemId, ItemMetrics> =
        ids.into_iter().map(|id| (id.clone(), item_metrics(corpus.ranges.get(id), corpus.ratings.get(id)))).collect();

    let ses: Vec<f64> = items.values().filter_map(|m| m.rating_se.value().copied()).collect();
    let mean_rating_se = if ses.is_empty() { Err(AnalysisError::NoData) } else { Ok(mean(&ses)) }.into();

    let mut per_annotator: BTreeMap<&AnnotatorId, Vec<f64>> = BTreeMap::new();
    for per in corpus.ratings.values() {
        for (who, v) in per {
            per_annotator.entry(who).or_default().push(v.get());
        }
    }
    let utilization = scale_utilization(per_annotator.values().map(Vec::as_slice)).into();

    let both: Vec<(Vec<Bounds>, Vec<f64>)> = corpus
        .ranges
        .iter()
        .filter_map(|(id, r)| {
            let ratings = corpus.ratings.get(id)?;
            Some((r.values().copied().collect(), ratings.values().map(|v| v.get()).collect()))
        })
        .collect();
    let uncertainty = if both.is_empty() { Err(AnalysisError::NoData) } else { uncertainty_comparison(&both) };

    AnalysisReport {
        items,
        mean_rating_se,
        utilization,
        methods: compare_methods(corpus, exec).into(),
        self_consistency: self_consistency_summary(&corpus.probes).into(),
        uncertainty: uncertainty.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Relation;

    fn ann(i: usize) -> AnnotatorId {
        AnnotatorId::new(format!("a{i}"))
    }

    fn sample() -> Corpus {
        let mut c = Corpus::default();
        let items = [("x", 0.2), ("y", 0.5), ("z", 0.8)];
        for (id, mu) in items {
            for i in 0..3 {
                let off = i as f64 * 0.02;
                c.add_range(ItemId::new(id), ann(i), Bounds::new(mu - 0.05 + off, mu + 0.05 + off).unwrap());
                c.add_rating(ItemId::new(id), ann(i), ScalePos::new(mu + off).unwrap());
            }
        }
        c.judgments.push(PairwiseJudgment::new("p", "x", "y", Relation::Lt).unwrap());
        c.judgments.push(PairwiseJudgment::new("p", "z", "y", Relation::Gt).unwrap());
        c.judgments.push(PairwiseJudgment::new("q", "y", "x", Relation::Gt).unwrap());
        c.probes.push((SessionId::new("s0"), vec![0.2, 0.3, 0.3]));
        c
    }

    #[test]
    fn first_entry_wins() {
        let mut c = Corpus::default();
        assert!(c.add_rating(ItemId::new("x"), ann(0), ScalePos::new(0.1).unwrap()));
        assert!(!c.add_rating(ItemId::new("x"), ann(0), ScalePos::new(0.9).unwrap()));
        assert_eq!(c.ratings[&ItemId::new("x")][&ann(0)].get(), 0.1);
    }

    #[test]
    fn pairs_are_canonical_and_judged_only() {
        let c = sample();
        let pairs = c.judged_pairs();
        assert_eq!(pairs, vec![(ItemId::new("x"), ItemId::new("y")), (ItemId::new("y"), ItemId::new("z"))]);
        let cmp = compare_methods(&c, Execution::Sequential).unwrap();
        assert_eq!(cmp.pairs.len(), 2);
        assert_eq!(cmp.pairs[1].truth.masses(), [1.0, 0.0, 0.0]);
        assert_eq!(cmp.range.mean_wd, Some(0.0));
        assert_eq!(cmp.range.dropped, 0);
    }

    #[test]
    fn modes_agree() {
        let c = sample();
        assert_eq!(analyze(&c, Execution::Sequential), analyze(&c, Execution::Parallel));
    }

    #[test]
    fn empty_corpus_is_all_not_computable() {
        let r = analyze(&Corpus::default(), Execution::Sequential);
        assert!(r.items.is_empty());
        assert!(!r.mean_rating_se.is_ok());
        assert!(!r.utilization.is_ok());
        assert!(!r.methods.is_ok());
        assert!(!r.self_consistency.is_ok());
        assert!(!r.uncertainty.is_ok());
    }

    #[test]
    fn ratings_only_gates_range_metrics() {
        let mut c = sample();
        c.ranges.clear();
        let r = analyze(&c, Execution::Sequential);
        let x = &r.items[&ItemId::new("x")];
        assert!(x.rating_se.is_ok());
        assert!(!x.lower_se.is_ok() && !x.mean_range_width.is_ok());
        assert!(r.utilization.is_ok());
        assert!(!r.uncertainty.is_ok());
        let m = r.methods.value().unwrap();
        assert_eq!(m.range.mean_wd, None);
        assert_eq!(m.range.dropped, 2);
        assert!(m.direct.mean_wd.is_some());
    }

    #[test]
    fn report_json_round_trips() {
        let r = analyze(&sample(), Execution::Sequential);
        let json = serde_json::to_string(&r).unwrap();
        let back: AnalysisReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
