//! Re-derives every declared relation from world poses alone.

use std::collections::BTreeMap;

use super::assets::AssetEntry;
use super::geometry::{wrap_angle, Vec2};
use super::map::{Road, RoadNetwork};
use super::placement::{ScenePose, ALONGSIDE};
use crate::scene::{Behavior, Relation, SceneDoc};

const TOL: f64 = 0.5;
const MIN_SEPARATION: f64 = 1.0;
const MAX_HEADING_DEV: f64 = 15.0;

/// Road carrying a world point: heading-aligned roads first, then the one
/// whose paved surface is nearest.
fn locate(map: &RoadNetwork, p: Vec2, heading: f64) -> Option<&Road> {
    map.roads
        .iter()
        .filter_map(|r| {
            let pr = r.centerline.project(p);
            if pr.s <= 0.0 || pr.s >= r.centerline.length() {
                return None;
            }
            let (lo, hi) = r.paved();
            let outside = (lo - pr.d).max(pr.d - hi).max(0.0);
            let misaligned = wrap_angle(pr.heading - heading).abs() > 30f64.to_radians();
            Some(((misaligned, outside), r))
        })
        .min_by(|a, b| a.0 .0.cmp(&b.0 .0).then(a.0 .1.total_cmp(&b.0 .1)))
        .map(|(_, r)| r)
}

/// Human-readable description of every relation or legality constraint
/// that the poses fail. Empty means all hold.
pub fn verify_scene(
    doc: &SceneDoc,
    map: &RoadNetwork,
    assets: &BTreeMap<String, &AssetEntry>,
    poses: &[ScenePose],
    clearance: f64,
) -> Vec<String> {
    let mut out = Vec::new();
    let by_id: BTreeMap<&str, &ScenePose> = poses.iter().map(|p| (p.actor.as_str(), p)).collect();
    for actor in &doc.actors {
        let Some(pa) = by_id.get(actor.id.as_str()) else {
            out.push(format!("{} has no pose", actor.id));
            continue;
        };
        let pos = &actor.position;
        let a_xy = Vec2::new(pa.x, pa.y);
        let (road, sb, db) = if let Some(pb) = by_id.get(pos.reference.as_str()) {
            let Some(road) = locate(map, Vec2::new(pb.x, pb.y), pb.heading) else {
                out.push(format!("{} is not on any road", pb.actor));
                continue;
            };
            let pr = road.centerline.project(Vec2::new(pb.x, pb.y));
            (road, pr.s, pr.d)
        } else if let Some(l) = map.landmark(&pos.reference) {
            let road = map.road(&l.road).unwrap();
            (road, l.s, road.lane_offset(l.lane))
        } else {
            out.push(format!("{}: reference {} not found", actor.id, pos.reference));
            continue;
        };
        let pr = road.centerline.project(a_xy);
        let (ds, dd) = (pr.s - sb, pr.d - db);
        let ok = match (pos.relation, pos.distance) {
            (Relation::Front, Some(g)) => (ds - g).abs() <= TOL,
            (Relation::Front, None) => ds >= MIN_SEPARATION,
            (Relation::Behind, Some(g)) => (-ds - g).abs() <= TOL,
            (Relation::Behind, None) => -ds >= MIN_SEPARATION,
            (Relation::Left, Some(g)) => (dd - g).abs() <= TOL && ds.abs() <= ALONGSIDE,
            (Relation::Left, None) => dd >= MIN_SEPARATION && ds.abs() <= ALONGSIDE,
            (Relation::Right, Some(g)) => (-dd - g).abs() <= TOL && ds.abs() <= ALONGSIDE,
            (Relation::Right, None) => -dd >= MIN_SEPARATION && ds.abs() <= ALONGSIDE,
            (Relation::At, _) => ds.abs() <= TOL,
        };
        if !ok {
            out.push(format!(
                "{} {} {}: Δs = {ds:.2} m, Δd = {dd:.2} m",
                actor.id, pos.relation, pos.reference
            ));
        }
        if actor.behavior != Behavior::WalkCross {
            let own = locate(map, a_xy, pa.heading).map(|r| r.centerline.project(a_xy).heading);
            if own.is_none_or(|h| wrap_angle(pa.heading - h).abs() > MAX_HEADING_DEV.to_radians()) {
                out.push(format!("{} heading deviates from its lane", actor.id));
            }
        }
    }
    for (i, a) in poses.iter().enumerate() {
        for b in &poses[i + 1..] {
            let (Some(ea), Some(eb)) = (assets.get(&a.actor), assets.get(&b.actor)) else { continue };
            let gap = a.footprint(ea).distance(&b.footprint(eb));
            if gap < clearance {
                out.push(format!("{} and {} are {gap:.2} m apart", a.actor, b.actor));
            }
        }
    }
    out
}
