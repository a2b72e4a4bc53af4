//! Static scene instantiation: relative constraints → world poses.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::assets::AssetEntry;
use super::geometry::OrientedBox;
use super::map::RoadNetwork;
use super::{CompileError, CompileOptions};
use crate::scene::{ActorType, Behavior, Relation, SceneDoc};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LaneRef {
    pub road: String,
    pub lane: u32,
}

/// Initial state of one actor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePose {
    pub actor: String,
    pub x: f64,
    pub y: f64,
    /// Radians, counter-clockwise from +x.
    pub heading: f64,
    pub lane: LaneRef,
    /// Arc length along the road reference line.
    pub s: f64,
    /// Lateral offset from the road reference line, positive to the left.
    pub d: f64,
    /// km/h.
    pub speed: f64,
}

impl ScenePose {
    pub fn footprint(&self, asset: &AssetEntry) -> OrientedBox {
        OrientedBox {
            center: super::geometry::Vec2::new(self.x, self.y),
            heading: self.heading,
            length: asset.length,
            width: asset.width,
        }
    }
}

/// Longitudinal window within which an actor counts as beside its reference.
pub const ALONGSIDE: f64 = 5.0;
const ALONGSIDE_JITTER: f64 = 3.0;
const LATERAL_JITTER: f64 = 0.5;

struct Anchor {
    road: String,
    s: f64,
    d: f64,
    lane: u32,
}

fn anchor(map: &RoadNetwork, placed: &BTreeMap<&str, ScenePose>, reference: &str) -> Option<Anchor> {
    if let Some(p) = placed.get(reference) {
        return Some(Anchor { road: p.lane.road.clone(), s: p.s, d: p.d, lane: p.lane.lane });
    }
    let l = map.landmark(reference)?;
    let road = map.road(&l.road)?;
    Some(Anchor { road: l.road.clone(), s: l.s, d: road.lane_offset(l.lane), lane: l.lane })
}

/// Places every actor in placement order. Round 0 uses the nominal gaps;
/// later rounds jitter only the gaps the document leaves undeclared.
pub fn instantiate_static_scene(
    doc: &SceneDoc,
    map: &RoadNetwork,
    assets: &BTreeMap<String, &AssetEntry>,
    opts: &CompileOptions,
) -> Result<Vec<ScenePose>, CompileError> {
    let order = doc.placement_order().map_err(|e| CompileError::Scene(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut last = Vec::new();
    for round in 0..opts.max_rounds.max(1) {
        let jitter = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| if round == 0 { 0.0 } else { rng.random_range(lo..=hi) };
        let mut placed: BTreeMap<&str, ScenePose> = BTreeMap::new();
        for id in &order {
            let actor = doc.actor(id).expect("ordered ids exist");
            let pos = &actor.position;
            let a = anchor(map, &placed, &pos.reference).ok_or_else(|| CompileError::UnknownLandmark {
                actor: actor.id.clone(),
                landmark: pos.reference.clone(),
            })?;
            let road = map.road(&a.road).expect("anchors lie on map roads");
            let sidewalk = road.paved().0 - 1.5;
            let pedestrian = actor.actor_type == ActorType::Pedestrian;
            let (s, d) = match pos.relation {
                Relation::Front | Relation::Behind => {
                    let gap = pos.distance.unwrap_or_else(|| opts.front_gap + jitter(&mut rng, 0.0, opts.jitter));
                    let s = if pos.relation == Relation::Front { a.s + gap } else { a.s - gap };
                    (s, if pedestrian { sidewalk } else { road.lane_offset(a.lane) })
                }
                Relation::Left | Relation::Right => {
                    let sign = if pos.relation == Relation::Left { 1.0 } else { -1.0 };
                    let on_center = (a.d - road.lane_offset(a.lane)).abs() < 0.1;
                    let adjacent = if sign > 0.0 { a.lane + 1 < road.lanes } else { a.lane > 0 };
                    let d = match pos.distance {
                        Some(dist) => a.d + sign * dist,
                        None if on_center && adjacent && !pedestrian => road.lane_offset((a.lane as i64 + sign as i64) as u32),
                        None => a.d + sign * (opts.lateral_gap + jitter(&mut rng, 0.0, LATERAL_JITTER)),
                    };
                    let ds = if pos.distance.is_some() { 0.0 } else { jitter(&mut rng, -ALONGSIDE_JITTER, ALONGSIDE_JITTER) };
                    (a.s + ds, d)
                }
                Relation::At => (a.s, if pedestrian { sidewalk } else { a.d }),
            };
            let (p, tangent) = road.centerline.frenet_to_world(s, d);
            let heading = if actor.behavior == Behavior::WalkCross {
                super::geometry::wrap_angle(tangent + std::f64::consts::FRAC_PI_2)
            } else {
                tangent
            };
            let speed = match actor.behavior {
                Behavior::Stop => 0.0,
                _ if actor.actor_type.is_static_object() => 0.0,
                _ => actor.speed.unwrap_or(assets[&actor.id].default_speed),
            };
            placed.insert(
                id,
                ScenePose {
                    actor: actor.id.clone(),
                    x: p.x,
                    y: p.y,
                    heading,
                    lane: LaneRef { road: road.id.clone(), lane: road.nearest_lane(d) },
                    s,
                    d,
                    speed,
                },
            );
        }
        let poses: Vec<ScenePose> = doc.actors.iter().map(|a| placed.remove(a.id.as_str()).unwrap()).collect();
        last = legality_violations(doc, map, assets, &poses, opts);
        if last.is_empty() {
            return Ok(poses);
        }
    }
    Err(CompileError::Unsatisfiable { rounds: opts.max_rounds.max(1), violations: last })
}

/// Off-road placements and clearance conflicts, each naming the relations involved.
pub fn legality_violations(
    doc: &SceneDoc,
    map: &RoadNetwork,
    assets: &BTreeMap<String, &AssetEntry>,
    poses: &[ScenePose],
    opts: &CompileOptions,
) -> Vec<String> {
    let describe = |id: &str| {
        let a = doc.actor(id).unwrap();
        format!("{} {} {}", a.id, a.position.relation, a.position.reference)
    };
    let mut out = Vec::new();
    for p in poses {
        let road = map.road(&p.lane.road).unwrap();
        let (lo, hi) = road.paved();
        if p.d < lo - opts.shoulder || p.d > hi + opts.shoulder || p.s < 0.0 || p.s > road.centerline.length() {
            out.push(format!("{} lies off road {}", describe(&p.actor), road.id));
        }
    }
    for (i, a) in poses.iter().enumerate() {
        for b in &poses[i + 1..] {
            let gap = a.footprint(assets[&a.actor]).distance(&b.footprint(assets[&b.actor]));
            if gap < opts.clearance {
                out.push(format!(
                    "{} / {}: clearance {gap:.2} m below {} m",
                    describe(&a.actor),
                    describe(&b.actor),
                    opts.clearance
                ));
            }
        }
    }
    out
}
