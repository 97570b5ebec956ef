//! Synthetic annotators for checking, without people, that ranges recover
//! pairwise relationship distributions better than single values do.
//!
//! Each item has a latent value `mu` and an ambiguity half-width `w`. Each
//! annotator has a bias `b`, a noise scale `sigma` and a sensitivity `kappa`.
//! On every task an annotator perceives `p = clip(mu + b + N(0, sigma))`.
//! A single-value rating is `p`. A range is `clip([p - w kappa, p + w kappa])`.
//! A pairwise judgment is EQ when `|p_a - p_b| <= (w_a + w_b) kappa` and the
//! sign of the difference otherwise. The three tasks draw their perception
//! noise independently.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, LogNormal, Normal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{compare_methods, Corpus, MethodComparison};
use crate::exec::Execution;
use crate::model::{AnnotatorId, Bounds, ItemId, PairwiseJudgment, Relation, ScalePos};

pub const ASSUMPTION: &str = "assumed coupling: a simulated annotator calls two items indistinguishable \
when their perceived values differ by at most (w_a + w_b) * kappa; ranges use the same half-widths";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("invalid simulation config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueDistribution {
    Uniform { low: f64, high: f64 },
    Beta { alpha: f64, beta: f64 },
}

impl ValueDistribution {
    pub fn mean(&self) -> f64 {
        match *self {
            ValueDistribution::Uniform { low, high } => (low + high) / 2.0,
            ValueDistribution::Beta { alpha, beta } => alpha / (alpha + beta),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            ValueDistribution::Uniform { low, high } => (high - low).powi(2) / 12.0,
            ValueDistribution::Beta { alpha, beta } => {
                let s = alpha + beta;
                alpha * beta / (s * s * (s + 1.0))
            }
        }
    }
}

/// Closed interval sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub low: f64,
    pub high: f64,
}

impl Span {
    pub const ZERO: Span = Span { low: 0.0, high: 0.0 };

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.low == self.high {
            return self.low;
        }
        Uniform::new_inclusive(self.low, self.high).expect("validated span").sample(rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub items: usize,
    pub annotators: usize,
    pub value: ValueDistribution,
    /// Item ambiguity half-width `w`.
    pub half_width: Span,
    /// Standard deviation of the per-annotator bias.
    pub bias_sd: f64,
    /// Per-annotator perception noise scale `sigma`.
    pub noise_sd: Span,
    /// Log-scale standard deviation of the per-annotator sensitivity `kappa`.
    pub kappa_log_sd: f64,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            items: 10,
            annotators: 5,
            value: ValueDistribution::Uniform { low: 0.0, high: 1.0 },
            half_width: Span { low: 0.0, high: 0.1 },
            bias_sd: 0.1,
            noise_sd: Span { low: 0.05, high: 0.15 },
            kappa_log_sd: 0.25,
            seed: 0,
        }
    }
}

impl WorldConfig {
    /// No ambiguity, no bias, no noise.
    pub fn noiseless() -> Self {
        WorldConfig { half_width: Span::ZERO, bias_sd: 0.0, noise_sd: Span::ZERO, kappa_log_sd: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: &str| Err(SimulationError::Config(m.to_string()));
        if self.items < 2 {
            return bad("at least 2 items");
        }
        if self.annotators < 2 {
            return bad("at least 2 annotators");
        }
        match self.value {
            ValueDistribution::Uniform { low, high } if !(0.0 <= low && low <= high && high <= 1.0) => {
                return bad("value range must lie in [0, 1]");
            }
            ValueDistribution::Beta { alpha, beta }
                if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) =>
            {
                return bad("beta parameters must be positive");
            }
            _ => {}
        }
        for (name, s) in [("half_width", self.half_width), ("noise_sd", self.noise_sd)] {
            if !(s.low >= 0.0 && s.low <= s.high && s.high.is_finite()) {
                return Err(SimulationError::Config(format!("{name} must be a non-negative interval")));
            }
        }
        if !(self.bias_sd >= 0.0 && self.bias_sd.is_finite())
            || !(self.kappa_log_sd >= 0.0 && self.kappa_log_sd.is_finite())
        {
            return bad("scales must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimItem {
    pub id: ItemId,
    pub mu: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimAnnotator {
    pub id: AnnotatorId,
    pub bias: f64,
    pub sigma: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub items: Vec<SimItem>,
    pub annotators: Vec<SimAnnotator>,
}

fn normal<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    if sd == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sd).expect("validated sd").sample(rng)
}

/// Zero-padded ids so lexical order is index order.
pub fn item_id(i: usize, n: usize) -> ItemId {
    let width = n.saturating_sub(1).to_string().len();
    ItemId::new(format!("sim-{i:0width$}"))
}

pub fn annotator_id(j: usize) -> AnnotatorId {
    AnnotatorId::new(format!("sim-annotator-{j}"))
}

/// The rng for one replication: the master seed on its own stream.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

pub fn sample_world<R: Rng + ?Sized>(config: &WorldConfig, rng: &mut R) -> Result<World, SimulationError> {
    config.validate()?;
    let beta = match config.value {
        ValueDistribution::Beta { alpha, beta } => {
            Some(Beta::new(alpha, beta).map_err(|e| SimulationError::Config(e.to_string()))?)
        }
        ValueDistribution::Uniform { .. } => None,
    };
    let value_span = match config.value {
        ValueDistribution::Uniform { low, high } => Span { low, high },
        ValueDistribution::Beta { .. } => Span::ZERO,
    };
    let items = (0..config.items)
        .map(|i| {
            let mu = match &beta {
                Some(b) => b.sample(rng),
                None => value_span.sample(rng),
            };
            SimItem { id: item_id(i, config.items), mu, w: config.half_width.sample(rng) }
        })
        .collect();
    let kappa = if config.kappa_log_sd > 0.0 {
        Some(LogNormal::new(0.0, config.kappa_log_sd).map_err(|e| SimulationError::Config(e.to_string()))?)
    } else {
        None
    };
    let annotators = (0..config.annotators)
        .map(|j| SimAnnotator {
            id: annotator_id(j),
            bias: normal(rng, config.bias_sd),
            sigma: config.noise_sd.sample(rng),
            kappa: kappa.as_ref().map_or(1.0, |k| k.sample(rng)),
        })
        .collect();
    Ok(World { items, annotators })
}

/// The world of replication 0.
pub fn gen_world(config: &WorldConfig) -> Result<World, SimulationError> {
    sample_world(config, &mut replication_rng(config.seed, 0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRange {
    pub item: ItemId,
    pub annotator: AnnotatorId,
    pub bounds: Bounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRating {
    pub item: ItemId,
    pub annotator: AnnotatorId,
    pub value: ScalePos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimAnnotations {
    pub ranges: Vec<SimRange>,
    pub ratings: Vec<SimRating>,
    /// Every annotator judges every pair `(a, b)` with `a` before `b`.
    pub judgments: Vec<PairwiseJudgment>,
}

impl SimAnnotations {
    pub fn to_corpus(&self) -> Corpus {
        let mut c = Corpus::default();
        for r in &self.ranges {
            c.add_range(r.item.clone(), r.annotator.clone(), r.bounds);
        }
        for r in &self.ratings {
            c.add_rating(r.item.clone(), r.annotator.clone(), r.value);
        }
        c.judgments = self.judgments.clone();
        c
    }
}

fn perceive<R: Rng + ?Sized>(rng: &mut R, item: &SimItem, who: &SimAnnotator) -> f64 {
    (item.mu + who.bias + normal(rng, who.sigma)).clamp(0.0, 1.0)
}

pub fn simulate_annotations<R: Rng + ?Sized>(world: &World, rng: &mut R) -> SimAnnotations {
    let mut out = SimAnnotations { ranges: Vec::new(), ratings: Vec::new(), judgments: Vec::new() };
    for who in &world.annotators {
        for item in &world.items {
            let p = perceive(rng, item, who);
            let h = item.w * who.kappa;
            let bounds = Bounds::new((p - h).max(0.0), (p + h).min(1.0)).expect("clipped range");
            out.ranges.push(SimRange { item: item.id.clone(), annotator: who.id.clone(), bounds });
        }
        for item in &world.items {
            let value = ScalePos::clamped(perceive(rng, item, who));
            out.ratings.push(SimRating { item: item.id.clone(), annotator: who.id.clone(), value });
        }
        let seen: Vec<f64> = world.items.iter().map(|i| perceive(rng, i, who)).collect();
        for (x, a) in world.items.iter().enumerate() {
            for (y, b) in world.items.iter().enumerate().skip(x + 1) {
                let diff = seen[x] - seen[y];
                let rel = if diff.abs() <= (a.w + b.w) * who.kappa {
                    Relation::Eq
                } else if diff < 0.0 {
                    Relation::Lt
                } else {
                    Relation::Gt
                };
                out.judgments.push(PairwiseJudgment {
                    annotator: who.id.clone(),
                    a: a.id.clone(),
                    b: b.id.clone(),
                    rel,
                });
            }
        }
    }
    out
}

/// World and annotations of one replication.
pub fn replicate(config: &WorldConfig, replication: u64) -> Result<(World, SimAnnotations), SimulationError> {
    let mut rng = replication_rng(config.seed, replication);
    let world = sample_world(config, &mut rng)?;
    let ann = simulate_annotations(&world, &mut rng);
    Ok((world, ann))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodScores {
    pub range: f64,
    pub direct: f64,
    pub infer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub index: u64,
    pub wd: MethodScores,
    /// EQ-overestimate rates; `None` when no pair had a LT/GT majority.
    pub overestimate_range: Option<f64>,
    pub overestimate_direct: Option<f64>,
    pub overestimate_infer: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub assumption: String,
    pub config: WorldConfig,
    pub replications: usize,
    pub mean_wd: MethodScores,
    pub range_beats_direct: f64,
    pub range_beats_infer: f64,
    /// Mean rates over replications where the rate was defined.
    pub mean_overestimate: MethodScores,
    /// Fraction of replications where Infer's overestimate rate exceeded Range's.
    pub infer_overestimates_more: f64,
    pub runs: Vec<ReplicationResult>,
}

fn score(index: u64, cmp: &MethodComparison) -> ReplicationResult {
    let rate = |s: &crate::analysis::MethodSummary| s.overestimate.map(|o| o.rate);
    ReplicationResult {
        index,
        wd: MethodScores {
            range: cmp.range.mean_wd.unwrap_or(f64::NAN),
            direct: cmp.direct.mean_wd.unwrap_or(f64::NAN),
            infer: cmp.infer.mean_wd.unwrap_or(f64::NAN),
        },
        overestimate_range: rate(&cmp.range),
        overestimate_direct: rate(&cmp.direct),
        overestimate_infer: rate(&cmp.infer),
    }
}

fn mean_defined(xs: impl Iterator<Item = Option<f64>>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs.flatten() {
        s += x;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

pub fn run_experiment(
    config: &WorldConfig,
    replications: usize,
    exec: Execution,
) -> Result<ExperimentReport, SimulationError> {
    config.validate()?;
    if replications == 0 {
        return Err(SimulationError::Config("at least 1 replication".into()));
    }
    let runs = exec.map_range(replications, |r| {
        let (_, ann) = replicate(config, r as u64)?;
        let cmp = compare_methods(&ann.to_corpus(), Execution::Sequential)
            .map_err(|e| SimulationError::Config(format!("replication {r}: {e}")))?;
        Ok(score(r as u64, &cmp))
    });
    let runs: Vec<ReplicationResult> = runs.into_iter().collect::<Result<_, SimulationError>>()?;
    let n = runs.len() as f64;
    let frac = |f: &dyn Fn(&ReplicationResult) -> bool| runs.iter().filter(|r| f(r)).count() as f64 / n;
    Ok(ExperimentReport {
        assumption: ASSUMPTION.to_string(),
        config: config.clone(),
        replications,
        mean_wd: MethodScores {
            range: runs.iter().map(|r| r.wd.range).sum::<f64>() / n,
            direct: runs.iter().map(|r| r.wd.direct).sum::<f64>() / n,
            infer: runs.iter().map(|r| r.wd.infer).sum::<f64>() / n,
        },
        range_beats_direct: frac(&|r| r.wd.range < r.wd.direct),
        range_beats_infer: frac(&|r| r.wd.range < r.wd.infer),
        mean_overestimate: MethodScores {
            range: mean_defined(runs.iter().map(|r| r.overestimate_range)),
            direct: mean_defined(runs.iter().map(|r| r.overestimate_direct)),
            infer: mean_defined(runs.iter().map(|r| r.overestimate_infer)),
        },
        infer_overestimates_more: frac(&|r| match (r.overestimate_infer, r.overestimate_range) {
            (Some(i), Some(g)) => i > g,
            _ => false,
        }),
        runs,
    })
}

impl fmt::Display for ExperimentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {}", self.assumption)?;
        writeln!(
            f,
            "# {} items x {} annotators, {} replications, seed {}",
            self.config.items, self.config.annotators, self.replications, self.config.seed
        )?;
        writeln!(f, "{:<8} {:>10} {:>14}", "method", "mean WD", "EQ overest.")?;
        for (name, wd, over) in [
            ("range", self.mean_wd.range, self.mean_overestimate.range),
            ("direct", self.mean_wd.direct, self.mean_overestimate.direct),
            ("infer", self.mean_wd.infer, self.mean_overestimate.infer),
        ] {
            writeln!(f, "{name:<8} {wd:>10.6} {over:>14.4}")?;
        }
        writeln!(f, "range beats direct in {:.1}% of replications", 100.0 * self.range_beats_direct)?;
        writeln!(f, "range beats infer in {:.1}% of replications", 100.0 * self.range_beats_infer)?;
        write!(
            f,
            "infer overestimates EQ more than range in {:.1}% of replications",
            100.0 * self.infer_overestimates_more
        )
    }
}
