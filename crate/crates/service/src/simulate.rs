//! Replays simulated annotations through real sessions, so a simulated
//! dataset travels the same log, export and analysis path as real work.

use std::collections::BTreeMap;

use goldilocks_core::anchors::AnchorPool;
use goldilocks_core::model::{AnnotatorId, Bounds, Item, ItemId, ItemKind, Relation, ScalePos, SessionId, Timestamp};
use goldilocks_core::protocol::Interface;
use goldilocks_core::simulation::{SimAnnotations, World};

use crate::dataset::Dataset;
use crate::service::{JudgmentEntry, Service, ServiceError, SessionRequest, StepRequest};

/// Simulated annotators act one second apart.
const TICK_MS: i64 = 1000;

pub fn sim_items(world: &World) -> Vec<Item> {
    world
        .items
        .iter()
        .map(|i| {
            Item::new(i.id.clone(), ItemKind::Text, format!("simulated item {}", i.id)).expect("valid simulated id")
        })
        .collect()
}

struct Clock(i64);

impl Clock {
    fn tick(&mut self) -> Timestamp {
        self.0 += TICK_MS;
        Timestamp::from_millis(self.0)
    }
}

/// Creates `dataset` and gives every simulated annotator one range session,
/// one single-value session and one pairwise session over all items in
/// world order. Returns the created session ids.
pub fn write_simulation(
    service: &mut Service,
    dataset: &str,
    world: &World,
    ann: &SimAnnotations,
    start: Timestamp,
) -> Result<Vec<SessionId>, ServiceError> {
    service.create_dataset(
        Dataset::new(dataset, sim_items(world), AnchorPool::default()).map_err(crate::state::StateError::from)?,
    )?;
    let order: Vec<ItemId> = world.items.iter().map(|i| i.id.clone()).collect();
    let ranges: BTreeMap<(&AnnotatorId, &ItemId), Bounds> =
        ann.ranges.iter().map(|r| ((&r.annotator, &r.item), r.bounds)).collect();
    let ratings: BTreeMap<(&AnnotatorId, &ItemId), ScalePos> =
        ann.ratings.iter().map(|r| ((&r.annotator, &r.item), r.value)).collect();
    let judged: BTreeMap<(&AnnotatorId, &ItemId, &ItemId), Relation> =
        ann.judgments.iter().map(|j| ((&j.annotator, &j.a, &j.b), j.rel)).collect();

    let missing = |what: &str, who: &AnnotatorId, item: &ItemId| {
        ServiceError::BadRequest(format!("simulation has no {what} for {who} on {item}"))
    };
    let mut clock = Clock(start.millis());
    let mut sessions = Vec::new();
    for annotator in world.annotators.iter().map(|a| &a.id) {
        let request = |interface| SessionRequest {
            annotator: annotator.clone(),
            interface,
            probe: false,
            training: false,
            items: Some(order.clone()),
        };

        let s = service.create_session(dataset, request(Interface::RHa), clock.tick())?.session;
        for item in &order {
            let b = ranges.get(&(annotator, item)).ok_or_else(|| missing("range", annotator, item))?;
            service.submit(&s, StepRequest::Interaction, clock.tick())?;
            service.submit(&s, StepRequest::PlaceLower { pos: b.lower() }, clock.tick())?;
            service.submit(&s, StepRequest::Interaction, clock.tick())?;
            service.submit(&s, StepRequest::PlaceUpper { pos: b.upper() }, clock.tick())?;
            service.submit(&s, StepRequest::Commit, clock.tick())?;
        }
        sessions.push(s);

        let s = service.create_session(dataset, request(Interface::SvSa), clock.tick())?.session;
        for item in &order {
            let v = ratings.get(&(annotator, item)).ok_or_else(|| missing("rating", annotator, item))?;
            service.submit(&s, StepRequest::Interaction, clock.tick())?;
            service.submit(&s, StepRequest::PlaceValue { pos: *v }, clock.tick())?;
            service.submit(&s, StepRequest::Commit, clock.tick())?;
        }
        sessions.push(s);

        // the session asks about the current item against each later one and
        // records the later item first, so relations are flipped
        let s = service.create_session(dataset, request(Interface::Pairwise), clock.tick())?.session;
        for (k, current) in order.iter().enumerate().take(order.len().saturating_sub(1)) {
            let judgments = order[k + 1..]
                .iter()
                .map(|later| {
                    let rel = judged
                        .get(&(annotator, current, later))
                        .ok_or_else(|| missing("judgment", annotator, later))?;
                    Ok(JudgmentEntry { item: later.clone(), rel: rel.flip() })
                })
                .collect::<Result<Vec<_>, ServiceError>>()?;
            service.submit(&s, StepRequest::Judge { judgments }, clock.tick())?;
            service.submit(&s, StepRequest::Commit, clock.tick())?;
        }
        sessions.push(s);
    }
    Ok(sessions)
}
