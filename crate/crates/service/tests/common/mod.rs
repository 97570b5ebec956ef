#![allow(dead_code)]

use goldilocks_core::model::{ScalePos, SessionId, Timestamp};
use goldilocks_core::protocol::Interface;
use goldilocks_service::dataset::ingest;
use goldilocks_service::service::{Service, SessionRequest, StepRequest};
use goldilocks_service::store::Store;

pub const DATASET: &str = "faces";

/// Twelve items; the last three are seed anchors.
pub fn items_text() -> String {
    (0..12)
        .map(|i| format!("{{\"id\":\"face-{i:02}\",\"kind\":\"image\",\"body\":\"img/{}.jpg\"}}\n", 100 + i))
        .collect()
}

pub fn anchors_text() -> &'static str {
    r#"{
  "semantic": [
    {"pos": 0.0, "label": "infant"},
    {"pos": 0.5, "label": "middle aged"},
    {"pos": 1.0, "label": "elderly"}
  ],
  "examples": [
    {"item_id": "face-09", "lower": 0.1, "upper": 0.2},
    {"item_id": "face-10", "lower": 0.45, "upper": 0.55},
    {"item_id": "face-11", "lower": 0.8, "upper": 0.95}
  ]
}"#
}

pub fn service_with_dataset() -> Service {
    let mut svc = Service::new(Store::in_memory());
    svc.create_dataset(ingest(DATASET, &items_text(), Some(anchors_text())).unwrap()).unwrap();
    svc
}

pub fn at(ms: i64) -> Timestamp {
    Timestamp::from_millis(ms)
}

pub fn pos(v: f64) -> ScalePos {
    ScalePos::new(v).unwrap()
}

/// Opens a session without training.
pub fn open(svc: &mut Service, annotator: &str, interface: Interface, t: i64) -> SessionId {
    let req = SessionRequest { annotator: annotator.into(), interface, probe: false, training: false, items: None };
    svc.create_session(DATASET, req, at(t)).unwrap().session
}

/// Annotates every item of a range session, the k-th at `[lo(k), lo(k) + 0.1]`.
pub fn complete_range(svc: &mut Service, s: &SessionId, lo: impl Fn(usize) -> f64, mut t: i64) -> i64 {
    let n = svc.task(s).unwrap().total;
    for k in 0..n {
        let l = lo(k);
        for step in [
            StepRequest::Interaction,
            StepRequest::PlaceLower { pos: pos(l) },
            StepRequest::Interaction,
            StepRequest::PlaceUpper { pos: pos((l + 0.1).min(1.0)) },
            StepRequest::Commit,
        ] {
            t += 700;
            svc.submit(s, step, at(t)).unwrap();
        }
    }
    t
}

pub fn complete_values(svc: &mut Service, s: &SessionId, v: impl Fn(usize) -> f64, mut t: i64) -> i64 {
    let n = svc.task(s).unwrap().total;
    for k in 0..n {
        for step in [StepRequest::Interaction, StepRequest::PlaceValue { pos: pos(v(k)) }, StepRequest::Commit] {
            t += 900;
            svc.submit(s, step, at(t)).unwrap();
        }
    }
    t
}

/// A mixed workload: range, single-value and pairwise sessions plus a
/// cold-start draft, some of it left unfinished.
pub fn workload(svc: &mut Service) {
    let mut t = 10_000;
    for (n, who) in ["ann-a", "ann-b", "ann-c"].into_iter().enumerate() {
        let s = open(svc, who, Interface::RHa, t);
        t = complete_range(svc, &s, |k| (0.07 * k as f64 + 0.03 * n as f64).min(0.9), t);
        let s = open(svc, who, Interface::SvSa, t);
        t = complete_values(svc, &s, |k| (0.08 * k as f64 + 0.02 * n as f64).min(1.0), t);
    }
    let req = SessionRequest {
        annotator: "ann-a".into(),
        interface: Interface::Pairwise,
        probe: false,
        training: false,
        items: Some(vec!["face-00".into(), "face-01".into(), "face-02".into()]),
    };
    let s = svc.create_session(DATASET, req, at(t)).unwrap().session;
    use goldilocks_core::model::Relation;
    use goldilocks_service::service::JudgmentEntry;
    let j = |item: &str, rel| JudgmentEntry { item: item.into(), rel };
    svc.submit(
        &s,
        StepRequest::Judge { judgments: vec![j("face-01", Relation::Lt), j("face-02", Relation::Lt)] },
        at(t + 1),
    )
    .unwrap();
    svc.submit(&s, StepRequest::Commit, at(t + 2)).unwrap();

    // left half done
    let s = open(svc, "ann-d", Interface::RHa, t + 3);
    svc.submit(&s, StepRequest::Interaction, at(t + 4)).unwrap();
    svc.submit(&s, StepRequest::PlaceLower { pos: pos(0.25) }, at(t + 5)).unwrap();

    use goldilocks_service::state::ColdStartOp;
    svc.cold_start(DATASET, ColdStartOp::Open { semantic: Vec::new() }).unwrap();
    svc.cold_start_draw(DATASET, 2, Some(3)).unwrap();
}
