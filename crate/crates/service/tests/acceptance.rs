//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs with `cargo test --test acceptance`.

use std::collections::BTreeMap;
use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use goldilocks_core::analysis::*;
use goldilocks_core::anchors::*;
use goldilocks_core::exec::Execution;
use goldilocks_core::model::*;
use goldilocks_core::protocol::{start_session, Interface, ProbePlan, SessionConfig, SessionError};
use goldilocks_core::simulation::{replicate, run_experiment, WorldConfig};
use goldilocks_service::state::{Record, State};
use goldilocks_service::store::{Store, LOG_FILE};
use goldilocks_service::{dataset, service, Service};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// ---- simulation ----

fn simulation_ordering() -> Check {
    let start = Instant::now();
    let r = run_experiment(&WorldConfig::default(), 100, Execution::Parallel).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let m = r.mean_wd;
    let detail = format!(
        "WD range {:.4} < direct {:.4} < infer {:.4}; range beats infer in {:.0}%; {:.2}s",
        m.range,
        m.direct,
        m.infer,
        100.0 * r.range_beats_infer,
        took.as_secs_f64()
    );
    ensure(m.range < m.direct && m.direct < m.infer, format!("ordering violated: {detail}"))?;
    ensure(r.range_beats_infer >= 0.9, format!("win rate too low: {detail}"))?;
    ensure(took < Duration::from_secs(60), format!("too slow: {detail}"))?;
    Ok(detail)
}

fn overestimate_ordering() -> Check {
    let r = run_experiment(&WorldConfig::default(), 100, Execution::Parallel).map_err(|e| e.to_string())?;
    let detail = format!(
        "infer overestimates more in {:.0}% (mean rates range {:.3}, infer {:.3})",
        100.0 * r.infer_overestimates_more,
        r.mean_overestimate.range,
        r.mean_overestimate.infer
    );
    ensure(r.infer_overestimates_more >= 0.9, detail.clone())?;
    Ok(detail)
}

// ---- oracle equivalence ----

struct Sample {
    n: usize,
    ranges: Vec<Vec<Option<(f64, f64)>>>,
    values: Vec<Vec<Option<f64>>>,
    judgments: Vec<(usize, usize, usize, usize)>,
}

fn grid(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0..=20u32) as f64 / 20.0
}

fn sample(rng: &mut ChaCha8Rng) -> Sample {
    let n = rng.random_range(2..=10);
    let m = rng.random_range(1..=5);
    let mut ranges = vec![vec![None; m]; n];
    let mut values = vec![vec![None; m]; n];
    for i in 0..n {
        for j in 0..m {
            if rng.random_bool(0.85) {
                let (x, y) = (grid(rng), grid(rng));
                ranges[i][j] = Some((x.min(y), x.max(y)));
            }
            if rng.random_bool(0.85) {
                values[i][j] = Some(grid(rng));
            }
        }
    }
    let judgments = (0..rng.random_range(0..40))
        .map(|_| (rng.random_range(0..m), rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..3)))
        .filter(|(_, a, b, _)| a != b)
        .collect();
    Sample { n, ranges, values, judgments }
}

fn ann(j: usize) -> AnnotatorId {
    AnnotatorId::new(format!("a{j}"))
}

fn itm(i: usize) -> ItemId {
    ItemId::new(format!("i{i}"))
}

const RELS: [Relation; 3] = [Relation::Lt, Relation::Eq, Relation::Gt];

fn share(counts: [usize; 3]) -> Option<[f64; 3]> {
    let n: usize = counts.iter().sum();
    (n > 0).then(|| counts.map(|c| c as f64 / n as f64))
}

/// Brute-force tallies, written without the library's relation helpers.
fn oracle(s: &Sample, a: usize, b: usize) -> [Option<[f64; 3]>; 4] {
    let mut range = [0; 3];
    let mut direct = [0; 3];
    for j in 0..s.ranges[a].len() {
        if let (Some((al, au)), Some((bl, bu))) = (s.ranges[a][j], s.ranges[b][j]) {
            range[if au < bl {
                0
            } else if al > bu {
                2
            } else {
                1
            }] += 1;
        }
        if let (Some(x), Some(y)) = (s.values[a][j], s.values[b][j]) {
            direct[if x < y {
                0
            } else if x > y {
                2
            } else {
                1
            }] += 1;
        }
    }
    let ci = |xs: Vec<f64>| -> Option<(f64, f64)> {
        if xs.len() < 2 {
            return None;
        }
        if xs.iter().all(|x| *x == xs[0]) {
            return Some((xs[0], xs[0]));
        }
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        Some((m - 1.96 * sd / n.sqrt(), m + 1.96 * sd / n.sqrt()))
    };
    let infer = ci(s.values[a].iter().flatten().copied().collect())
        .zip(ci(s.values[b].iter().flatten().copied().collect()))
        .map(|((al, au), (bl, bu))| {
            if au < bl {
                [1.0, 0.0, 0.0]
            } else if al > bu {
                [0.0, 0.0, 1.0]
            } else {
                [0.0, 1.0, 0.0]
            }
        });
    let mut truth = [0; 3];
    for &(_, x, y, r) in &s.judgments {
        if (x, y) == (a, b) {
            truth[r] += 1;
        } else if (x, y) == (b, a) {
            truth[2 - r] += 1;
        }
    }
    [share(range), share(direct), infer, share(truth)]
}

fn oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut pairs = 0;
    for case in 0..1000 {
        let s = sample(&mut rng);
        let ranges: Vec<Ranges> = s
            .ranges
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter_map(|(j, b)| b.map(|(l, u)| (ann(j), Bounds::new(l, u).unwrap())))
                    .collect()
            })
            .collect();
        let ratings: Vec<Ratings> = s
            .values
            .iter()
            .map(|row| {
                row.iter().enumerate().filter_map(|(j, v)| Some((ann(j), ScalePos::new((*v)?).unwrap()))).collect()
            })
            .collect();
        let judgments: Vec<PairwiseJudgment> = s
            .judgments
            .iter()
            .map(|&(j, a, b, r)| PairwiseJudgment::new(ann(j), itm(a), itm(b), RELS[r]).unwrap())
            .collect();
        for a in 0..s.n {
            for b in 0..s.n {
                if a == b {
                    continue;
                }
                let va: Vec<f64> = ratings[a].values().map(|v| v.get()).collect();
                let vb: Vec<f64> = ratings[b].values().map(|v| v.get()).collect();
                let got = [
                    range_distribution(&ranges[a], &ranges[b]).ok().map(|d| d.masses()),
                    direct_distribution(&ratings[a], &ratings[b]).ok().map(|d| d.masses()),
                    infer_distribution(&va, &vb).ok().map(|d| d.masses()),
                    ground_truth_distribution(&itm(a), &itm(b), &judgments).ok().map(|d| d.masses()),
                ];
                let want = oracle(&s, a, b);
                ensure(got == want, format!("case {case} pair ({a},{b}): got {got:?}, oracle {want:?}"))?;
                pairs += 1;
            }
        }
    }
    Ok(format!("1000 datasets, {pairs} ordered pairs, 4 methods exact"))
}

// ---- Wasserstein ----

fn random_dist(rng: &mut ChaCha8Rng) -> RelationshipDistribution {
    loop {
        let (x, y, z): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let s = x + y + z;
        if s <= 0.0 {
            continue;
        }
        let (p, q) = (x / s, y / s);
        if let Ok(d) = RelationshipDistribution::new(p, q, (1.0 - p - q).max(0.0)) {
            return d;
        }
    }
}

fn wasserstein_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 10_000;
    for k in 0..n {
        let x = random_dist(&mut rng);
        // every tenth pair is identical, to exercise the zero side of identity
        let y = if k % 10 == 0 { x } else { random_dist(&mut rng) };
        let z = random_dist(&mut rng);
        let (xy, yx) = (wasserstein_distance(&x, &y), wasserstein_distance(&y, &x));
        ensure(xy >= 0.0, format!("negative distance {xy}"))?;
        ensure(xy == yx, format!("asymmetric: {xy} vs {yx}"))?;
        let equal = x.masses().iter().zip(y.masses()).all(|(a, b)| (a - b).abs() <= 1e-12);
        ensure((xy <= 1e-12) == equal, format!("identity fails for {x:?} {y:?}: {xy}"))?;
        let via = wasserstein_distance(&x, &z) + wasserstein_distance(&z, &y);
        ensure(xy <= via + 1e-12, format!("triangle fails: {xy} > {via}"))?;
    }
    let lt = RelationshipDistribution::new(1.0, 0.0, 0.0).unwrap();
    let gt = RelationshipDistribution::new(0.0, 0.0, 1.0).unwrap();
    let far = wasserstein_distance(&lt, &gt);
    ensure(far == 2.0, format!("W((1,0,0),(0,0,1)) = {far}"))?;
    Ok(format!("{n} pairs; W((1,0,0),(0,0,1)) = {far:?}"))
}

fn degenerate_reduction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut pairs = 0;
    for case in 0..1000 {
        let n = rng.random_range(2..=10);
        let m = rng.random_range(1..=5);
        let vals: Vec<Vec<Option<f64>>> =
            (0..n).map(|_| (0..m).map(|_| rng.random_bool(0.9).then(|| grid(&mut rng))).collect()).collect();
        let ranges: Vec<Ranges> = vals
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter_map(|(j, v)| Some((ann(j), Bounds::point(ScalePos::new((*v)?).unwrap()))))
                    .collect()
            })
            .collect();
        let ratings: Vec<Ratings> = vals
            .iter()
            .map(|row| {
                row.iter().enumerate().filter_map(|(j, v)| Some((ann(j), ScalePos::new((*v)?).unwrap()))).collect()
            })
            .collect();
        for a in 0..n {
            for b in 0..n {
                let (r, d) =
                    (range_distribution(&ranges[a], &ranges[b]), direct_distribution(&ratings[a], &ratings[b]));
                ensure(r == d, format!("case {case} ({a},{b}): range {r:?} vs direct {d:?}"))?;
                pairs += 1;
            }
        }
    }
    Ok(format!("1000 zero-width instances, {pairs} pairs identical"))
}

// ---- anchors ----

fn random_pool(rng: &mut ChaCha8Rng) -> AnchorPool {
    let k = rng.random_range(1..30);
    let anchors = (0..k)
        .map(|i| {
            let (x, y) = (grid(rng), grid(rng));
            ExampleAnchor::new(format!("e{i:02}"), Bounds::new(x.min(y), x.max(y)).unwrap(), AnchorOrigin::Seed)
        })
        .collect();
    AnchorPool::new(anchors, vec![]).unwrap()
}

fn anchor_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let params = SelectionParams::default();
    let steps = [BoundStep::LowerBound, BoundStep::UpperBound];
    let mut full = 0;
    for case in 0..2000 {
        let pool = random_pool(&mut rng);
        let step = steps[case % 2];
        let sel = select_global_anchors(&pool, step, &params).map_err(|e| e.to_string())?;
        let pos: Vec<f64> = sel.anchors.iter().map(|(_, p)| p.get()).collect();
        ensure(
            pos.windows(2).all(|w| w[1] - w[0] >= sel.min_distance),
            format!("case {case}: spacing violated {pos:?}"),
        )?;
        ensure(sel.anchors.len() <= params.target_max, format!("case {case}: {} anchors", sel.anchors.len()))?;
        let mut shown: Vec<f64> = pool.anchors().iter().map(|a| anchor_display_position(a, step).get()).collect();
        shown.sort_by(f64::total_cmp);
        let (mut possible, mut last) = (0, f64::NEG_INFINITY);
        for p in shown {
            if p - last >= 0.01 {
                possible += 1;
                last = p;
            }
        }
        if possible >= params.target_min {
            full += 1;
            ensure(sel.anchors.len() >= params.target_min, format!("case {case}: only {} anchors", sel.anchors.len()))?;
        }
        let mut shuffled = pool.anchors().to_vec();
        let r = rng.random_range(0..shuffled.len());
        shuffled.rotate_left(r);
        shuffled.reverse();
        let other = AnchorPool::new(shuffled, vec![]).unwrap();
        let again = select_global_anchors(&other, step, &params).map_err(|e| e.to_string())?;
        ensure(sel.item_ids() == again.item_ids(), format!("case {case}: selection depends on pool order"))?;
    }
    for case in 0..10_000 {
        let pool = random_pool(&mut rng);
        let step = steps[case % 2];
        let p = ScalePos::new(rng.random_range(0.0..=1.0)).unwrap();
        let (below, above) = local_neighbors(&pool, step, p);
        let shown: BTreeMap<&ItemId, f64> =
            pool.anchors().iter().map(|a| (&a.item_id, anchor_display_position(a, step).get())).collect();
        let lo = below.map(|b| shown[&b.item_id]);
        let hi = above.map(|a| shown[&a.item_id]);
        ensure(
            lo.is_none_or(|l| l <= p.get()) && hi.is_none_or(|h| h > p.get()),
            format!("local case {case}: not bracketing"),
        )?;
        for &s in shown.values() {
            let closer_below = s <= p.get() && lo.is_none_or(|l| s > l);
            let closer_above = s > p.get() && hi.is_none_or(|h| s < h);
            ensure(
                !closer_below && !closer_above,
                format!("local case {case}: {s} is nearer than the chosen neighbours"),
            )?;
        }
    }
    Ok(format!("2000 global selections ({full} with room for 5+), 10000 local lookups"))
}

// ---- protocol ----

fn items(n: usize) -> Vec<Item> {
    (0..n).map(|i| Item::text(format!("t{i:02}"), format!("text {i}")).unwrap()).collect()
}

fn seeds() -> AnchorPool {
    let a = |id: &str, l, u| ExampleAnchor::new(id, Bounds::new(l, u).unwrap(), AnchorOrigin::Seed);
    AnchorPool::new(vec![a("s0", 0.1, 0.2), a("s1", 0.4, 0.5), a("s2", 0.8, 0.9)], vec![]).unwrap()
}

fn annotate(s: &mut goldilocks_core::protocol::Session, lo: f64, t: &mut i64) -> Result<(), SessionError> {
    let mut at = || {
        *t += 1000;
        Timestamp::from_millis(*t)
    };
    s.record_interaction(at())?;
    s.place_lower(ScalePos::new(lo).unwrap(), at())?;
    s.record_interaction(at())?;
    s.place_upper(ScalePos::new(lo + 0.05).unwrap(), at())?;
    s.commit_item(at())
}

fn protocol_invariants() -> Check {
    let mut cfg = SessionConfig::new(Interface::RHa, seeds());
    cfg.training = None;
    let t0 = Timestamp::from_millis(0);

    // upper below lower is rejected
    let mut s = start_session("p-order", "ann", &items(3), cfg.clone(), t0).map_err(|e| e.to_string())?;
    s.record_interaction(Timestamp::from_millis(1)).unwrap();
    s.place_lower(ScalePos::new(0.6).unwrap(), Timestamp::from_millis(2)).unwrap();
    s.record_interaction(Timestamp::from_millis(3)).unwrap();
    let rejected = s.place_upper(ScalePos::new(0.4).unwrap(), Timestamp::from_millis(4));
    ensure(matches!(rejected, Err(SessionError::Order { .. })), format!("upper < lower gave {rejected:?}"))?;

    // 10th and 20th items replaced by the first
    let src = items(25);
    let mut probe_cfg = cfg.clone();
    probe_cfg.probe_plan = Some(ProbePlan::first_item_at_10_and_20());
    let mut s = start_session("p-probe", "ann", &src, probe_cfg, t0).map_err(|e| e.to_string())?;
    let seq: Vec<&ItemId> = s.sequence().iter().map(|i| &i.id).collect();
    ensure(seq.len() == 25, format!("probe sequence has {} items", seq.len()))?;
    for (k, id) in seq.iter().enumerate() {
        let want = if k == 9 || k == 19 { &src[0].id } else { &src[k].id };
        ensure(*id == want, format!("position {k}: {id} instead of {want}"))?;
    }

    // the probe item's own earlier annotation is never shown while re-annotating it
    let mut t = 0;
    for k in 0..25 {
        if k == 9 || k == 19 {
            let view = s.current_task_view().map_err(|e| e.to_string())?;
            let probe = &src[0].id;
            ensure(view.item.id == *probe, "probe repeat not current")?;
            ensure(
                !view.pool.iter().any(|(a, _)| &a.item_id == probe)
                    && !view.anchors.iter().any(|v| &v.anchor.item_id == probe),
                format!("self-anchor visible at position {}", k + 1),
            )?;
        }
        annotate(&mut s, 0.02 * k as f64, &mut t).map_err(|e| e.to_string())?;
    }

    // augment mode: one more anchor per commit
    let mut s = start_session("p-augment", "ann", &items(12), cfg, t0).map_err(|e| e.to_string())?;
    let mut sizes = vec![s.visible_pool().len()];
    let mut t = 0;
    for k in 0..11 {
        annotate(&mut s, 0.05 * k as f64, &mut t).map_err(|e| e.to_string())?;
        sizes.push(s.visible_pool().len());
    }
    ensure(sizes.windows(2).all(|w| w[1] == w[0] + 1), format!("pool sizes {sizes:?}"))?;
    Ok(format!("order rejected; probe at 10/20; self-anchor withheld; pool {} -> {}", sizes[0], sizes[sizes.len() - 1]))
}

// ---- self-consistency ----

/// Attempts, then hand-computed Δ1 = |v1 - v0|, Δ2 = |v2 - v1| and
/// (Δ2 + 1e-8) / (Δ1 + 1e-8). Inputs are dyadic so the deltas are exact.
const FIXTURE: [([f64; 3], f64, f64, f64); 20] = [
    ([0.5, 0.5, 0.5], 0.0, 0.0, 1.0),
    ([0.25, 0.375, 0.4375], 0.125, 0.0625, 0.5000000399999968),
    ([0.125, 0.5, 0.5], 0.375, 0.0, 2.6666665955555575e-08),
    ([0.375, 0.375, 0.875], 0.0, 0.5, 50000001.0),
    ([0.0, 1.0, 0.0], 1.0, 1.0, 1.0),
    ([1.0, 0.0, 1.0], 1.0, 1.0, 1.0),
    ([0.25, 0.5, 0.75], 0.25, 0.25, 1.0),
    ([0.3125, 0.28125, 0.296875], 0.03125, 0.015625, 0.5000001599999488),
    ([0.875, 0.8125, 0.5625], 0.0625, 0.25, 3.9999995200000766),
    ([0.5, 0.5, 0.5000000009313226], 0.0, 9.313225746154785e-10, 1.0931322574615479),
    ([0.75, 0.25, 0.25], 0.5, 0.0, 1.9999999600000007e-08),
    ([0.0625, 0.078125, 0.109375], 0.015625, 0.03125, 1.9999993600004096),
    ([0.625, 0.4375, 0.4375], 0.1875, 0.0, 5.333333048888904e-08),
    ([0.0, 0.0, 1.0], 0.0, 1.0, 100000001.0),
    ([0.375, 0.125, 0.625], 0.25, 0.5, 1.9999999600000016),
    ([0.8125, 0.796875, 0.78125], 0.015625, 0.015625, 1.0),
    ([0.5, 0.5000000074505806, 0.5], 7.450580596923828e-09, 7.450580596923828e-09, 1.0),
    ([0.25, 0.625, 0.125], 0.375, 0.5, 1.3333333244444447),
    ([0.99609375, 0.00390625, 0.5], 0.9921875, 0.49609375, 0.50000000503937),
    ([0.3, 0.3, 0.3], 0.0, 0.0, 1.0),
];

fn self_consistency_fixture() -> Check {
    // relative for the ratio: at 1e8 a double cannot resolve 1e-12 absolutely
    let close = |got: f64, want: f64| (got - want).abs() <= 1e-12 * want.abs().max(1.0);
    for (k, (v, d1, d2, ratio)) in FIXTURE.iter().enumerate() {
        let r = self_consistency(SessionId::new(format!("s{k}")), v).map_err(|e| e.to_string())?;
        ensure(
            close(r.delta1, *d1) && close(r.delta2, *d2) && close(r.ratio, *ratio),
            format!("case {k}: got ({}, {}, {}), want ({d1}, {d2}, {ratio})", r.delta1, r.delta2, r.ratio),
        )?;
    }
    ensure(EPSILON == 1e-8, "epsilon")?;
    ensure(self_consistency(SessionId::new("short"), &[0.1, 0.2]).is_err(), "two attempts accepted")?;
    Ok("20 cases within 1e-12".into())
}

// ---- crash recovery ----

fn crash_recovery() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    {
        let (store, _) = Store::open(dir.path(), 1_000_000).map_err(|e| e.to_string())?;
        let mut svc = Service::new(store);
        drive(&mut svc)?;
    }
    let log = fs::read(dir.path().join(LOG_FILE)).map_err(|e| e.to_string())?;

    #[derive(serde::Deserialize)]
    struct Line {
        record: Record,
    }
    let mut st = State::default();
    let mut states = vec![st.clone()];
    for line in log.split(|b| *b == b'\n').filter(|l| !l.is_empty()) {
        let l: Line = serde_json::from_slice(line).map_err(|e| e.to_string())?;
        st.apply(&l.record).map_err(|e| e.to_string())?;
        states.push(st.clone());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..100 {
        let cut = rng.random_range(0..=log.len());
        let complete = log[..cut].iter().filter(|b| **b == b'\n').count();
        let d = tempfile::tempdir().map_err(|e| e.to_string())?;
        fs::write(d.path().join(LOG_FILE), &log[..cut]).map_err(|e| e.to_string())?;
        let (store, _) = Store::open(d.path(), 1_000_000).map_err(|e| format!("case {case} cut {cut}: {e}"))?;
        ensure(
            store.state() == &states[complete],
            format!("case {case}: cut at byte {cut} of {} restored wrong state", log.len()),
        )?;
    }
    Ok(format!("100 truncations of a {}-record log", states.len() - 1))
}

/// Range and single-value sessions with some work left in progress.
fn drive(svc: &mut Service) -> Result<(), String> {
    let text: String =
        (0..20).map(|i| format!("{{\"id\":\"c{i:02}\",\"kind\":\"text\",\"body\":\"claim {i}\"}}\n")).collect();
    svc.create_dataset(dataset::ingest("claims", &text, None).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let mut t = 0;
    let mut at = || {
        t += 600;
        Timestamp::from_millis(t)
    };
    for (n, iface) in [Interface::RHa, Interface::SvSa, Interface::RHa, Interface::SvEa].into_iter().enumerate() {
        let req = service::SessionRequest {
            annotator: format!("w{n}").into(),
            interface: iface,
            probe: false,
            training: false,
            items: None,
        };
        let s = svc.create_session("claims", req, at()).map_err(|e| e.to_string())?.session;
        let todo = if n == 3 { 4 } else { 10 };
        for k in 0..todo {
            let x = ScalePos::new(0.06 * k as f64 + 0.01 * n as f64).unwrap();
            let steps = if iface == Interface::RHa {
                vec![
                    service::StepRequest::Interaction,
                    service::StepRequest::PlaceLower { pos: x },
                    service::StepRequest::Interaction,
                    service::StepRequest::PlaceUpper { pos: ScalePos::clamped(x.get() + 0.1) },
                    service::StepRequest::Commit,
                ]
            } else {
                vec![
                    service::StepRequest::Interaction,
                    service::StepRequest::PlaceValue { pos: x },
                    service::StepRequest::Commit,
                ]
            };
            for st in steps {
                svc.submit(&s, st, at()).map_err(|e| e.to_string())?;
            }
        }
    }
    Ok(())
}

// ---- CLI pipeline ----

fn cli_pipeline() -> Check {
    let bin = env!("CARGO_BIN_EXE_goldilocks");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("data");
    let export = dir.path().join("export.jsonl");
    let seed = 17u64;
    let run = |args: &[&str]| -> Result<String, String> {
        let out =
            Command::new(bin).arg("--seed").arg(seed.to_string()).args(args).output().map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("goldilocks {args:?}: {}", String::from_utf8_lossy(&out.stderr)));
        }
        String::from_utf8(out.stdout).map_err(|e| e.to_string())
    };
    let data_s = data.to_str().unwrap();
    run(&["simulate", "--replications", "1", "--data", data_s, "--dataset", "sim"])?;
    run(&["export", "--data", data_s, "--dataset", "sim", "--out", export.to_str().unwrap()])?;
    let via_cli = run(&["analyze", "--input", export.to_str().unwrap()])?;

    let config = WorldConfig { seed, ..WorldConfig::default() };
    let (_, ann) = replicate(&config, 0).map_err(|e| e.to_string())?;
    let report = analyze(&ann.to_corpus(), Execution::Parallel);
    let in_process = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())? + "\n";
    ensure(via_cli == in_process, "CLI report differs from in-process analysis")?;
    let parsed: AnalysisReport = serde_json::from_str(&via_cli).map_err(|e| e.to_string())?;
    ensure(parsed == report, "parsed CLI report differs")?;
    Ok(format!("seed {seed}: {} bytes identical", via_cli.len()))
}

fn main() {
    let checks: [Criterion; 10] = [
        ("simulation ordering", simulation_ordering),
        ("overestimate ordering", overestimate_ordering),
        ("oracle equivalence", oracle_equivalence),
        ("wasserstein metric properties", wasserstein_properties),
        ("degenerate-range reduction", degenerate_reduction),
        ("anchor-engine properties", anchor_properties),
        ("protocol invariants", protocol_invariants),
        ("self-consistency math", self_consistency_fixture),
        ("crash recovery", crash_recovery),
        ("cli pipeline", cli_pipeline),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
