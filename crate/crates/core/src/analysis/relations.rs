//! Recovering pairwise relationship distributions from each kind of data.

use std::collections::BTreeMap;

use crate::model::{AnnotatorId, Bounds, ItemId, PairwiseJudgment, Relation, RelationshipDistribution, ScalePos};

use super::stats::confidence_interval;
use super::AnalysisError;

/// Per-annotator ranges for one item.
pub type Ranges = BTreeMap<AnnotatorId, Bounds>;
/// Per-annotator single values for one item.
pub type Ratings = BTreeMap<AnnotatorId, ScalePos>;

/// Relation of range `a` to range `b`. Overlap, including touching
/// endpoints, means indistinguishable.
pub fn relation_from_ranges(a: Bounds, b: Bounds) -> Relation {
    if a.upper() < b.lower() {
        Relation::Lt
    } else if a.lower() > b.upper() {
        Relation::Gt
    } else {
        Relation::Eq
    }
}

/// Relation of two raw values; only exact equality is `Eq`.
pub fn relation_from_values(a: f64, b: f64) -> Relation {
    if a < b {
        Relation::Lt
    } else if a > b {
        Relation::Gt
    } else {
        Relation::Eq
    }
}

fn tally_common<T: Copy>(
    a: &BTreeMap<AnnotatorId, T>,
    b: &BTreeMap<AnnotatorId, T>,
    rel: impl Fn(T, T) -> Relation,
) -> Result<RelationshipDistribution, AnalysisError> {
    let mut counts = [0usize; 3];
    for (who, va) in a {
        if let Some(vb) = b.get(who) {
            counts[rel(*va, *vb).index()] += 1;
        }
    }
    RelationshipDistribution::from_counts(counts).ok_or(AnalysisError::NoData)
}

/// Proportion of annotators whose ranges put `a` below, level with, or above `b`.
pub fn range_distribution(a: &Ranges, b: &Ranges) -> Result<RelationshipDistribution, AnalysisError> {
    tally_common(a, b, relation_from_ranges)
}

/// Proportion of annotators whose single values order `a` against `b`.
pub fn direct_distribution(a: &Ratings, b: &Ratings) -> Result<RelationshipDistribution, AnalysisError> {
    tally_common(a, b, |x: ScalePos, y: ScalePos| relation_from_values(x.get(), y.get()))
}

/// All mass on the relation given by comparing the two items' 95% confidence
/// intervals; overlapping intervals mean indistinguishable.
pub fn infer_distribution(a: &[f64], b: &[f64]) -> Result<RelationshipDistribution, AnalysisError> {
    let ca = confidence_interval(a)?;
    let cb = confidence_interval(b)?;
    let rel = if ca.upper < cb.lower {
        Relation::Lt
    } else if ca.lower > cb.upper {
        Relation::Gt
    } else {
        Relation::Eq
    };
    Ok(RelationshipDistribution::point(rel))
}

/// Proportion of direct pairwise judgments for the unordered pair, oriented
/// as `(a, b)`.
pub fn ground_truth_distribution(
    a: &ItemId,
    b: &ItemId,
    judgments: &[PairwiseJudgment],
) -> Result<RelationshipDistribution, AnalysisError> {
    let mut counts = [0usize; 3];
    for rel in judgments.iter().filter_map(|j| j.oriented(a, b)) {
        counts[rel.index()] += 1;
    }
    RelationshipDistribution::from_counts(counts).ok_or(AnalysisError::NoData)
}

/// 1-Wasserstein distance with `LT`, `EQ`, `GT` embedded at 0, 1, 2.
pub fn wasserstein_distance(d1: &RelationshipDistribution, d2: &RelationshipDistribution) -> f64 {
    let c1 = (d1.p_lt, d1.p_lt + d1.p_eq);
    let c2 = (d2.p_lt, d2.p_lt + d2.p_eq);
    (c1.0 - c2.0).abs() + (c1.1 - c2.1).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(l: f64, u: f64) -> Bounds {
        Bounds::new(l, u).unwrap()
    }

    fn d(l: f64, e: f64, g: f64) -> RelationshipDistribution {
        RelationshipDistribution::new(l, e, g).unwrap()
    }

    fn ratings(vals: &[f64]) -> Ratings {
        vals.iter().enumerate().map(|(i, v)| (AnnotatorId::new(format!("a{i}")), ScalePos::new(*v).unwrap())).collect()
    }

    #[test]
    fn range_relation_examples() {
        assert_eq!(relation_from_ranges(b(0.1, 0.2), b(0.5, 0.6)), Relation::Lt);
        assert_eq!(relation_from_ranges(b(0.1, 0.3), b(0.25, 0.5)), Relation::Eq);
        assert_eq!(relation_from_ranges(b(0.1, 0.2), b(0.2, 0.3)), Relation::Eq);
        assert_eq!(relation_from_ranges(b(0.5, 0.6), b(0.1, 0.2)), Relation::Gt);
    }

    #[test]
    fn range_distribution_proportions() {
        let mk = |v: &[(f64, f64)]| -> Ranges {
            v.iter().enumerate().map(|(i, (l, u))| (AnnotatorId::new(format!("a{i}")), b(*l, *u))).collect()
        };
        // LT, LT, EQ, GT, GT
        let a = mk(&[(0.1, 0.2), (0.1, 0.2), (0.4, 0.6), (0.8, 0.9), (0.8, 0.9)]);
        let bb = mk(&[(0.5, 0.6), (0.5, 0.6), (0.5, 0.5), (0.5, 0.6), (0.5, 0.6)]);
        let dist = range_distribution(&a, &bb).unwrap();
        assert_eq!(dist.masses(), [0.4, 0.2, 0.4]);
        let all_eq = range_distribution(&a, &a).unwrap();
        assert_eq!(all_eq.masses(), [0.0, 1.0, 0.0]);
        assert_eq!(range_distribution(&a, &Ranges::new()), Err(AnalysisError::NoData));
    }

    #[test]
    fn direct_distribution_examples() {
        let dist = direct_distribution(&ratings(&[0.2, 0.4]), &ratings(&[0.3, 0.3])).unwrap();
        assert_eq!(dist.masses(), [0.5, 0.0, 0.5]);
        let same = direct_distribution(&ratings(&[0.3, 0.6]), &ratings(&[0.3, 0.6])).unwrap();
        assert_eq!(same.masses(), [0.0, 1.0, 0.0]);
        let below = direct_distribution(&ratings(&[0.1, 0.2]), &ratings(&[0.5, 0.6])).unwrap();
        assert_eq!(below.masses(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn infer_distribution_examples() {
        let lt = infer_distribution(&[0.1, 0.2, 0.3], &[0.6, 0.7, 0.8]).unwrap();
        assert_eq!(lt.masses(), [1.0, 0.0, 0.0]);
        let eq = infer_distribution(&[0.1, 0.5, 0.9], &[0.2, 0.5, 0.8]).unwrap();
        assert_eq!(eq.masses(), [0.0, 1.0, 0.0]);
        let gt = infer_distribution(&[0.6, 0.7, 0.8], &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(gt.masses(), [0.0, 0.0, 1.0]);
        assert_eq!(infer_distribution(&[0.1], &[0.5, 0.6]), Err(AnalysisError::Insufficient));
    }

    #[test]
    fn ground_truth_examples() {
        let (x, y) = (ItemId::new("x"), ItemId::new("y"));
        let js = vec![
            PairwiseJudgment::new("p", "x", "y", Relation::Gt).unwrap(),
            PairwiseJudgment::new("q", "x", "y", Relation::Gt).unwrap(),
            PairwiseJudgment::new("r", "x", "y", Relation::Eq).unwrap(),
        ];
        let dist = ground_truth_distribution(&x, &y, &js).unwrap();
        assert_eq!(dist.p_lt, 0.0);
        assert!((dist.p_eq - 1.0 / 3.0).abs() < 1e-15);
        assert!((dist.p_gt - 2.0 / 3.0).abs() < 1e-15);

        let reversed = vec![PairwiseJudgment::new("p", "y", "x", Relation::Lt).unwrap()];
        assert_eq!(ground_truth_distribution(&x, &y, &reversed).unwrap().masses(), [0.0, 0.0, 1.0]);
        assert_eq!(ground_truth_distribution(&x, &ItemId::new("z"), &js), Err(AnalysisError::NoData));
    }

    /// Optimal transport between two tallies of `n` unit atoms, by trying
    /// every assignment of source atoms to sink atoms.
    fn transport_by_matching(p: [usize; 3], q: [usize; 3]) -> f64 {
        let expand = |c: [usize; 3]| -> Vec<usize> { (0..3).flat_map(|k| std::iter::repeat_n(k, c[k])).collect() };
        let (src, dst) = (expand(p), expand(q));
        let n = src.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = usize::MAX;
        permute(&mut perm, 0, &mut |perm| {
            let cost = (0..n).map(|i| src[i].abs_diff(dst[perm[i]])).sum::<usize>();
            best = best.min(cost);
        });
        best as f64 / n as f64
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }

    #[test]
    fn wasserstein_examples() {
        let x = d(0.2, 0.3, 0.5);
        assert_eq!(wasserstein_distance(&x, &x), 0.0);
        assert_eq!(wasserstein_distance(&d(1.0, 0.0, 0.0), &d(0.0, 0.0, 1.0)), 2.0);
        let w = wasserstein_distance(&d(0.5, 0.5, 0.0), &d(0.0, 0.5, 0.5));
        assert!((w - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wasserstein_matches_matching_oracle_for_all_five_vote_tallies() {
        let tallies: Vec<[usize; 3]> = (0..=5).flat_map(|l| (0..=5 - l).map(move |e| [l, e, 5 - l - e])).collect();
        for p in &tallies {
            for q in &tallies {
                let w = wasserstein_distance(
                    &RelationshipDistribution::from_counts(*p).unwrap(),
                    &RelationshipDistribution::from_counts(*q).unwrap(),
                );
                let oracle = transport_by_matching(*p, *q);
                assert!((w - oracle).abs() < 1e-12, "{p:?} {q:?}: {w} vs {oracle}");
            }
        }
    }
}
