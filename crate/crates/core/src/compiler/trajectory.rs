//! Behaviour-driven trajectory synthesis sampled at a fixed time step.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::geometry::{wrap_angle, Polyline, Vec2};
use super::map::RoadNetwork;
use super::placement::ScenePose;
use super::{CompileError, CompileOptions};
use crate::scene::{Behavior, Relation, SceneDoc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    CenterlineFollow,
    LaneChange,
    Following,
    InteractiveApproach,
    PedestrianNav,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyTable(BTreeMap<Behavior, Strategy>);

impl StrategyTable {
    pub fn parse(text: &str) -> Result<Self, String> {
        let rows: BTreeMap<Behavior, Strategy> = serde_yaml::from_str(text).map_err(|e| e.to_string())?;
        if let Some(missing) = Behavior::ALL.iter().find(|b| !rows.contains_key(b)) {
            return Err(format!("strategy table lacks {missing}"));
        }
        Ok(StrategyTable(rows))
    }

    pub fn get(&self, b: Behavior) -> Strategy {
        self.0[&b]
    }
}

impl Default for StrategyTable {
    fn default() -> Self {
        Self::parse(include_str!("../../data/behaviors.yaml")).expect("bundled strategy table is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub actor: String,
    pub strategy: Strategy,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn arc_length(&self) -> f64 {
        self.samples.windows(2).map(|w| Vec2::new(w[0].x, w[0].y).dist(Vec2::new(w[1].x, w[1].y))).sum()
    }
}

/// Monotone time from 0 and per-step displacement within `max_speed_kmh · dt`.
pub fn check_trajectory(t: &Trajectory, max_speed_kmh: f64, dt: f64) -> Result<(), String> {
    let first = t.samples.first().ok_or("no samples")?;
    if first.t != 0.0 {
        return Err(format!("{}: first sample at t = {}", t.actor, first.t));
    }
    let bound = max_speed_kmh / 3.6 * dt + 1e-6;
    for (i, w) in t.samples.windows(2).enumerate() {
        if w[1].t <= w[0].t {
            return Err(format!("{}: time not increasing at sample {}", t.actor, i + 1));
        }
        let step = Vec2::new(w[0].x, w[0].y).dist(Vec2::new(w[1].x, w[1].y));
        if step > bound {
            return Err(format!("{}: step {} moves {step:.3} m, bound {bound:.3} m", t.actor, i + 1));
        }
    }
    Ok(())
}

const RIGHT_TURN_RADIUS: f64 = 6.0;
const LEFT_TURN_RADIUS: f64 = 10.0;
const BRAKE_DECEL: f64 = 3.0;
const STOP_SHORT_OF: f64 = 3.0;
const CROSSING_MARGIN: f64 = 3.0;

fn gap(actor: &str, reason: String) -> CompileError {
    CompileError::TopologyGap { actor: actor.to_string(), reason }
}

fn quad_bezier(p0: Vec2, c: Vec2, p2: Vec2, n: usize) -> impl Iterator<Item = Vec2> {
    (0..=n).map(move |i| {
        let t = i as f64 / n as f64;
        p0.scale((1.0 - t) * (1.0 - t)).add(c.scale(2.0 * t * (1.0 - t))).add(p2.scale(t * t))
    })
}

fn smoothstep5(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
}

/// Path along the actor's current lateral offset from its pose onwards.
fn straight_path(map: &RoadNetwork, pose: &ScenePose) -> Polyline {
    let road = map.road(&pose.lane.road).unwrap();
    let line = road.centerline.offset(pose.d);
    let s0 = line.project(Vec2::new(pose.x, pose.y)).s;
    Polyline::new(line.slice(s0, line.length())).unwrap_or(line)
}

fn turn_path(map: &RoadNetwork, pose: &ScenePose, left: bool) -> Result<Polyline, CompileError> {
    let road = map.road(&pose.lane.road).unwrap();
    let line = road.centerline.offset(pose.d);
    let s0 = line.project(Vec2::new(pose.x, pose.y)).s;
    let target = if left { FRAC_PI_2 } else { -FRAC_PI_2 };
    let mut best: Option<(f64, Polyline, f64)> = None;
    for out in map.connected(&road.id) {
        let out_line = out.lane_line(pose.lane.lane.min(out.lanes - 1));
        let Some((s_in, s_out)) = line.first_crossing(&out_line) else { continue };
        if s_in <= s0 + 0.5 {
            continue;
        }
        let turn = wrap_angle(out_line.pose_at(s_out).1 - line.pose_at(s_in).1);
        if (turn - target).abs() < std::f64::consts::FRAC_PI_4 && best.as_ref().is_none_or(|b| s_in < b.0) {
            best = Some((s_in, out_line, s_out));
        }
    }
    let (s_in, out_line, s_out) = best.ok_or_else(|| {
        gap(&pose.actor, format!("no {} turn reachable from road {}", if left { "left" } else { "right" }, road.id))
    })?;
    let nominal = if left { LEFT_TURN_RADIUS } else { RIGHT_TURN_RADIUS };
    let r = nominal.min(s_in - s0).min(s_out);
    let mut pts = line.slice(s0, s_in - r);
    let corner = line.pose_at(s_in).0;
    pts.extend(quad_bezier(line.pose_at(s_in - r).0, corner, out_line.pose_at(s_out + r).0, 24).skip(1));
    pts.extend(out_line.slice(s_out + r, out_line.length()).into_iter().skip(1));
    Ok(Polyline::new(pts).expect("turn path has length"))
}

fn lane_change_path(map: &RoadNetwork, pose: &ScenePose, left: bool, length: f64) -> Result<Polyline, CompileError> {
    let road = map.road(&pose.lane.road).unwrap();
    let d1 = pose.d + if left { road.lane_width } else { -road.lane_width };
    let s0 = pose.s;
    let (end, heading) = road.centerline.frenet_to_world(s0 + length, d1);
    let (target_road, target_lane) = map.lane_at(end, heading, 0.5).ok_or_else(|| {
        gap(&pose.actor, format!("no lane {} of road {} at s = {:.1}", if left { "left" } else { "right" }, road.id, s0 + length))
    })?;
    let steps = (length.ceil() as usize).max(2);
    let mut pts: Vec<Vec2> = (0..=steps)
        .map(|i| {
            let u = length * i as f64 / steps as f64;
            road.centerline.frenet_to_world(s0 + u, pose.d + (d1 - pose.d) * smoothstep5(u / length)).0
        })
        .collect();
    let tail = target_road.lane_line(target_lane);
    let st = tail.project(end).s;
    pts.extend(tail.slice(st, tail.length()).into_iter().skip(1));
    Ok(Polyline::new(pts).expect("lane change path has length"))
}

fn crossing_path(map: &RoadNetwork, pose: &ScenePose) -> Polyline {
    let road = map.road(&pose.lane.road).unwrap();
    let (lo, hi) = road.paved();
    let start = Vec2::new(pose.x, pose.y);
    let width = (hi - lo) + 2.0 * CROSSING_MARGIN;
    Polyline::new(vec![start, start.add(Vec2::from_heading(pose.heading).scale(width))]).unwrap()
}

/// Distance travelled by `t` when cruising at `v` and braking to rest `stop_at` metres ahead.
fn approach_distance(t: f64, v: f64, stop_at: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let stop_at = stop_at.max(0.0);
    let decel = BRAKE_DECEL.max(v * v / (2.0 * stop_at.max(1e-6)));
    let brake_len = v * v / (2.0 * decel);
    let t_brake = ((stop_at - brake_len) / v).max(0.0);
    if t <= t_brake {
        return v * t;
    }
    let tau = (t - t_brake).min(v / decel);
    v * t_brake + v * tau - decel * tau * tau / 2.0
}

enum Motion {
    Still,
    Along { path: Polyline, clamp: bool, v: f64, stop_at: Option<f64> },
}

fn sample(pose: &ScenePose, motion: &Motion, dt: f64, horizon: f64) -> Vec<Sample> {
    let n = (horizon / dt).round() as usize;
    (0..=n)
        .map(|k| {
            let t = k as f64 * dt;
            match motion {
                Motion::Still => Sample { t, x: pose.x, y: pose.y, heading: pose.heading },
                Motion::Along { path, clamp, v, stop_at } => {
                    let mut s = match stop_at {
                        Some(stop) => approach_distance(t, *v, *stop),
                        None => v * t,
                    };
                    if *clamp {
                        s = s.min(path.length());
                    }
                    let (p, h) = path.pose_at(s);
                    Sample { t, x: p.x, y: p.y, heading: h }
                }
            }
        })
        .collect()
}

/// One trajectory per actor, in document order.
pub fn generate_trajectories(
    poses: &[ScenePose],
    doc: &SceneDoc,
    map: &RoadNetwork,
    table: &StrategyTable,
    opts: &CompileOptions,
) -> Result<Vec<Trajectory>, CompileError> {
    if !(opts.dt > 0.0) || !(opts.horizon > 0.0) {
        return Err(CompileError::Options("dt and horizon must be positive".into()));
    }
    let by_id: BTreeMap<&str, &ScenePose> = poses.iter().map(|p| (p.actor.as_str(), p)).collect();
    let mut paths: BTreeMap<&str, (Polyline, f64)> = BTreeMap::new();
    let mut out: BTreeMap<&str, Trajectory> = BTreeMap::new();

    let mut order: Vec<&ScenePose> = poses.iter().collect();
    // Followers go after everything else, front-most first, so leaders are ready.
    order.sort_by(|a, b| {
        let fa = table.get(doc.actor(&a.actor).unwrap().behavior) == Strategy::Following;
        let fb = table.get(doc.actor(&b.actor).unwrap().behavior) == Strategy::Following;
        fa.cmp(&fb).then(if fa { b.s.total_cmp(&a.s) } else { std::cmp::Ordering::Equal })
    });

    for pose in order {
        let actor = doc.actor(&pose.actor).ok_or_else(|| CompileError::ActorMismatch(pose.actor.clone()))?;
        let strategy = table.get(actor.behavior);
        let v = pose.speed / 3.6;
        let motion = if v <= 0.0 {
            Motion::Still
        } else {
            match strategy {
                Strategy::CenterlineFollow => {
                    let path = match actor.behavior {
                        Behavior::TurnLeft => turn_path(map, pose, true)?,
                        Behavior::TurnRight => turn_path(map, pose, false)?,
                        _ => straight_path(map, pose),
                    };
                    Motion::Along { path, clamp: false, v, stop_at: None }
                }
                Strategy::LaneChange => {
                    let left = actor.behavior == Behavior::LaneChangeLeft;
                    Motion::Along { path: lane_change_path(map, pose, left, opts.lane_change_length)?, clamp: false, v, stop_at: None }
                }
                Strategy::Following => {
                    let leader = leader_of(doc, poses, pose)
                        .and_then(|l| paths.get(l.actor.as_str()).map(|(p, lv)| (l, p, *lv)));
                    match leader {
                        Some((_, lpath, lv)) => {
                            let own = straight_path(map, pose);
                            let join = own.project(lpath.points()[0]).s;
                            let mut pts = own.slice(0.0, join);
                            pts.extend(lpath.points().iter().copied());
                            let speed = if lv > 0.0 { v.min(lv) } else { v };
                            let stop_at = (lv <= 0.0).then(|| (join - STOP_SHORT_OF * 2.0).max(0.0));
                            Motion::Along { path: Polyline::new(pts).unwrap_or(own), clamp: false, v: speed, stop_at }
                        }
                        None => Motion::Along { path: straight_path(map, pose), clamp: false, v, stop_at: None },
                    }
                }
                Strategy::InteractiveApproach => {
                    let stop = map
                        .landmarks_on(&pose.lane.road)
                        .into_iter()
                        .find(|l| l.s > pose.s + 2.0 * STOP_SHORT_OF)
                        .map(|l| l.s - STOP_SHORT_OF - pose.s)
                        .unwrap_or(v * opts.horizon / 2.0);
                    Motion::Along { path: straight_path(map, pose), clamp: false, v, stop_at: Some(stop) }
                }
                Strategy::PedestrianNav => Motion::Along { path: crossing_path(map, pose), clamp: true, v, stop_at: None },
            }
        };
        if let Motion::Along { path, v, .. } = &motion {
            paths.insert(&pose.actor, (path.clone(), *v));
        } else {
            paths.insert(&pose.actor, (straight_path(map, pose), 0.0));
        }
        out.insert(
            &pose.actor,
            Trajectory { actor: pose.actor.clone(), strategy, samples: sample(pose, &motion, opts.dt, opts.horizon) },
        );
    }
    doc.actors
        .iter()
        .map(|a| {
            by_id.get(a.id.as_str()).ok_or_else(|| CompileError::ActorMismatch(a.id.clone()))?;
            out.remove(a.id.as_str()).ok_or_else(|| CompileError::ActorMismatch(a.id.clone()))
        })
        .collect()
}

/// Actor being followed: the reference of a `behind` relation, otherwise the
/// nearest actor ahead in the same lane.
fn leader_of<'p>(doc: &SceneDoc, poses: &'p [ScenePose], pose: &ScenePose) -> Option<&'p ScenePose> {
    let actor = doc.actor(&pose.actor)?;
    if actor.position.relation == Relation::Behind {
        if let Some(l) = poses.iter().find(|p| p.actor == actor.position.reference) {
            return Some(l);
        }
    }
    poses
        .iter()
        .filter(|p| p.actor != pose.actor && p.lane == pose.lane && p.s > pose.s)
        .min_by(|a, b| a.s.total_cmp(&b.s))
}
