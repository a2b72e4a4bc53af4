//! Scenario DSL: `environment` / `road_network` / `actors` / `oracle`.
//!
//! Documents are YAML-compatible text. [`parse_scene_doc`] accepts any
//! YAML layout of the schema; [`SceneDoc::to_canonical`] writes the one
//! canonical form (two-space indentation, fixed block and key order, actors
//! in declaration order).

mod check;
mod vocab;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::fmt_num;

pub use check::{
    align_check, self_check, AlignReport, CoherenceTable, Finding, Requirement, RequirementTable,
    RuleAlignment,
};
pub use vocab::{
    ActorType, Behavior, Lateral, Longitudinal, Relation, RoadMarker, RoadType, TimeOfDay, TrafficSign,
    Weather,
};

pub const EGO: &str = "ego";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    pub weather: Weather,
    pub time: TimeOfDay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadNetworkSpec {
    pub road_type: RoadType,
    pub road_marker: RoadMarker,
    #[serde(default)]
    pub traffic_signs: Vec<TrafficSign>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Position {
    /// Actor id or road landmark.
    pub reference: String,
    pub relation: Relation,
    /// Gap to the reference in metres.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Actor {
    pub id: String,
    #[serde(rename = "type")]
    pub actor_type: ActorType,
    pub position: Position,
    pub behavior: Behavior,
    /// km/h.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Oracle {
    pub longitudinal: Longitudinal,
    pub lateral: Lateral,
}

/// Structured scene semantics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDoc {
    pub environment: Environment,
    pub road_network: RoadNetworkSpec,
    pub actors: Vec<Actor>,
    pub oracle: Oracle,
}

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("no actor with id \"ego\"")]
    MissingEgo,
    #[error("actor id {0:?} declared more than once")]
    DuplicateActor(String),
    #[error("actor id {0:?} must be lower-case letters, digits and underscores, and not a landmark name")]
    BadActorId(String),
    #[error("actor {actor} references {reference:?}, which is neither an actor nor a landmark of this road")]
    DanglingReference { actor: String, reference: String },
    #[error("position references form a cycle: {}", .0.join(" -> "))]
    ReferenceCycle(Vec<String>),
    #[error("actor {actor}: {message}")]
    InvalidValue { actor: String, message: String },
}

fn is_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// Parses and validates a scene document.
pub fn parse_scene_doc(text: &str) -> Result<SceneDoc, SceneError> {
    let doc: SceneDoc = serde_yaml::from_str(text).map_err(|e| {
        let (line, column) = e.location().map(|l| (l.line(), l.column())).unwrap_or((0, 0));
        SceneError::Syntax { line, column, message: e.to_string() }
    })?;
    doc.validate()?;
    Ok(doc)
}

impl SceneDoc {
    pub fn actor(&self, id: &str) -> Option<&Actor> {
        self.actors.iter().find(|a| a.id == id)
    }

    pub fn ego(&self) -> &Actor {
        self.actor(EGO).expect("validated docs have an ego")
    }

    pub fn is_landmark(&self, name: &str) -> bool {
        self.road_network.road_type.landmarks().contains(&name)
    }

    /// Structural invariants: one ego, unique ids, resolvable and acyclic references.
    pub fn validate(&self) -> Result<(), SceneError> {
        let mut ids = BTreeSet::new();
        for a in &self.actors {
            if !is_token(&a.id) || self.is_landmark(&a.id) {
                return Err(SceneError::BadActorId(a.id.clone()));
            }
            if !ids.insert(a.id.as_str()) {
                return Err(SceneError::DuplicateActor(a.id.clone()));
            }
            let bad = |m: &str| Err(SceneError::InvalidValue { actor: a.id.clone(), message: m.into() });
            if a.speed.is_some_and(|s| !s.is_finite() || s < 0.0) {
                return bad("speed must be finite and non-negative");
            }
            if a.position.distance.is_some_and(|d| !d.is_finite() || d <= 0.0) {
                return bad("distance must be finite and positive");
            }
            if a.position.reference == a.id {
                return Err(SceneError::ReferenceCycle(vec![a.id.clone(), a.id.clone()]));
            }
        }
        if !ids.contains(EGO) {
            return Err(SceneError::MissingEgo);
        }
        for a in &self.actors {
            let r = a.position.reference.as_str();
            if !ids.contains(r) && !self.is_landmark(r) {
                return Err(SceneError::DanglingReference { actor: a.id.clone(), reference: r.to_string() });
            }
        }
        self.placement_order().map(|_| ())
    }

    /// Actor ids with every actor after the actor it references.
    /// Declaration order breaks ties.
    pub fn placement_order(&self) -> Result<Vec<&str>, SceneError> {
        let refs: BTreeMap<&str, &str> = self
            .actors
            .iter()
            .filter(|a| self.actor(&a.position.reference).is_some())
            .map(|a| (a.id.as_str(), a.position.reference.as_str()))
            .collect();
        for a in &self.actors {
            let mut path = vec![a.id.as_str()];
            let mut cur = a.id.as_str();
            while let Some(&next) = refs.get(cur) {
                if let Some(pos) = path.iter().position(|p| *p == next) {
                    let mut cycle: Vec<String> = path[pos..].iter().map(|s| s.to_string()).collect();
                    cycle.push(next.to_string());
                    return Err(SceneError::ReferenceCycle(cycle));
                }
                path.push(next);
                cur = next;
            }
        }
        let mut placed: Vec<&str> = Vec::new();
        while placed.len() < self.actors.len() {
            for a in &self.actors {
                if placed.contains(&a.id.as_str()) {
                    continue;
                }
                match refs.get(a.id.as_str()) {
                    Some(r) if !placed.contains(r) => {}
                    _ => {
                        placed.push(&a.id);
                        break;
                    }
                }
            }
        }
        Ok(placed)
    }

    /// Canonical text form.
    pub fn to_canonical(&self) -> String {
        let mut s = String::new();
        let e = &self.environment;
        let _ = writeln!(s, "environment:\n  weather: {}\n  time: {}", e.weather, e.time);
        let r = &self.road_network;
        let _ = writeln!(s, "road_network:\n  road_type: {}\n  road_marker: {}", r.road_type, r.road_marker);
        if r.traffic_signs.is_empty() {
            s.push_str("  traffic_signs: []\n");
        } else {
            s.push_str("  traffic_signs:\n");
            for sign in &r.traffic_signs {
                let _ = writeln!(s, "    - {sign}");
            }
        }
        if self.actors.is_empty() {
            s.push_str("actors: []\n");
        } else {
            s.push_str("actors:\n");
        }
        for a in &self.actors {
            let _ = writeln!(s, "  - id: {}\n    type: {}\n    position:", a.id, a.actor_type);
            let _ = writeln!(s, "      reference: {}\n      relation: {}", a.position.reference, a.position.relation);
            if let Some(d) = a.position.distance {
                let _ = writeln!(s, "      distance: {}", fmt_num(d));
            }
            let _ = writeln!(s, "    behavior: {}", a.behavior);
            if let Some(v) = a.speed {
                let _ = writeln!(s, "    speed: {}", fmt_num(v));
            }
        }
        let o = &self.oracle;
        let _ = writeln!(s, "oracle:\n  longitudinal: {}\n  lateral: {}", o.longitudinal, o.lateral);
        s
    }

    /// Short English rendering, used as the text-variant scene description.
    pub fn describe(&self) -> String {
        let mut parts = vec![format!(
            "{} weather during {} on a {} with {} markings",
            self.environment.weather.as_str().replace('_', " "),
            self.environment.time.as_str(),
            self.road_network.road_type.as_str().replace('_', " "),
            self.road_network.road_marker.as_str().replace('_', " "),
        )];
        if !self.road_network.traffic_signs.is_empty() {
            let signs: Vec<String> = self.road_network.traffic_signs.iter().map(|s| s.as_str().replace('_', " ")).collect();
            parts.push(format!("signs: {}", signs.join(", ")));
        }
        for a in &self.actors {
            let mut p = format!(
                "{} ({}) {} {}{}, behavior {}",
                a.id,
                a.actor_type.as_str().replace('_', " "),
                a.position.relation,
                a.position.reference,
                a.position.distance.map(|d| format!(" at {} m", fmt_num(d))).unwrap_or_default(),
                a.behavior.as_str().replace('_', " "),
            );
            if let Some(v) = a.speed {
                let _ = write!(p, " at {} km/h", fmt_num(v));
            }
            parts.push(p);
        }
        let mut out = parts.join("; ");
        out.push('.');
        out
    }
}
