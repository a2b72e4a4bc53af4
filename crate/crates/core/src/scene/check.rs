use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ActorType, Behavior, Relation, RoadMarker, RoadType, SceneDoc, TimeOfDay, TrafficSign, Weather};
use crate::rule_model::{AtomicRule, ContextTag, RuleId};

const DEFAULT_COHERENCE: &str = include_str!("../../data/coherence.yaml");
const DEFAULT_REQUIREMENTS: &str = include_str!("../../data/requirements.yaml");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentPair {
    pub weather: Weather,
    pub time: TimeOfDay,
}

/// A sign that does not belong on a road type or in a weather condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignRule {
    #[serde(default)]
    pub road_type: Option<RoadType>,
    #[serde(default)]
    pub weather: Option<Weather>,
    pub sign: TrafficSign,
}

/// Table behind [`self_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherenceTable {
    #[serde(default)]
    pub behavior_max_speed: BTreeMap<Behavior, f64>,
    #[serde(default)]
    pub actor_behaviors: BTreeMap<ActorType, Vec<Behavior>>,
    #[serde(default)]
    pub actor_max_speed: BTreeMap<ActorType, f64>,
    #[serde(default)]
    pub incompatible_environment: Vec<EnvironmentPair>,
    #[serde(default)]
    pub incompatible_signs: Vec<SignRule>,
}

impl Default for CoherenceTable {
    fn default() -> Self {
        Self::from_yaml(DEFAULT_COHERENCE).expect("bundled coherence table parses")
    }
}

impl CoherenceTable {
    pub fn from_yaml(text: &str) -> Result<Self, serde_yaml::Error> {
        serde_yaml::from_str(text)
    }
}

/// A semantic incoherence in a scene document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Finding {
    MutualRelation { a: String, b: String, a_to_b: Relation, b_to_a: Relation },
    /// Several actors claim the same relative slot of one reference.
    SharedSlot { reference: String, relation: Relation, actors: Vec<String> },
    BehaviorSpeed { actor: String, behavior: Behavior, speed: f64, max: f64 },
    ActorSpeed { actor: String, actor_type: ActorType, speed: f64, max: f64 },
    ActorBehavior { actor: String, actor_type: ActorType, behavior: Behavior },
    Environment { weather: Weather, time: TimeOfDay },
    Sign { sign: TrafficSign, context: String },
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Finding::MutualRelation { a, b, a_to_b, b_to_a } => {
                write!(f, "mutual_relation: {a} is {a_to_b} of {b} while {b} is {b_to_a} of {a}")
            }
            Finding::SharedSlot { reference, relation, actors } => {
                write!(f, "shared_slot: {} all {relation} of {reference}", actors.join(", "))
            }
            Finding::BehaviorSpeed { actor, behavior, speed, max } => {
                write!(f, "behavior_speed: {actor} at {speed} km/h exceeds {max} km/h for {behavior}")
            }
            Finding::ActorSpeed { actor, actor_type, speed, max } => {
                write!(f, "actor_speed: {actor} at {speed} km/h exceeds {max} km/h for a {actor_type}")
            }
            Finding::ActorBehavior { actor, actor_type, behavior } => {
                write!(f, "actor_behavior: a {actor_type} ({actor}) cannot {behavior}")
            }
            Finding::Environment { weather, time } => write!(f, "environment: {weather} weather at {time}"),
            Finding::Sign { sign, context } => write!(f, "sign: {sign} does not fit {context}"),
        }
    }
}

/// Coherence findings beyond syntax; empty means coherent.
pub fn self_check(doc: &SceneDoc, table: &CoherenceTable) -> Vec<Finding> {
    let mut out = Vec::new();

    // Parsing rejects reference cycles, so this only fires on documents
    // assembled in code.
    for (i, a) in doc.actors.iter().enumerate() {
        for b in &doc.actors[i + 1..] {
            if a.position.reference == b.id && b.position.reference == a.id && b.position.relation != a.position.relation.inverse() {
                out.push(Finding::MutualRelation {
                    a: a.id.clone(),
                    b: b.id.clone(),
                    a_to_b: a.position.relation,
                    b_to_a: b.position.relation,
                });
            }
        }
    }

    let mut slots: BTreeMap<(&str, Relation, Option<u64>), Vec<String>> = BTreeMap::new();
    for a in doc.actors.iter().filter(|a| a.position.relation != Relation::At) {
        let key = (a.position.reference.as_str(), a.position.relation, a.position.distance.map(f64::to_bits));
        slots.entry(key).or_default().push(a.id.clone());
    }
    for ((reference, relation, _), actors) in slots {
        if actors.len() > 1 {
            out.push(Finding::SharedSlot { reference: reference.to_string(), relation, actors });
        }
    }

    for a in &doc.actors {
        let speed = a.speed.unwrap_or(0.0);
        if let Some(&max) = table.behavior_max_speed.get(&a.behavior) {
            if speed > max {
                out.push(Finding::BehaviorSpeed { actor: a.id.clone(), behavior: a.behavior, speed, max });
            }
        }
        if let Some(&max) = table.actor_max_speed.get(&a.actor_type) {
            if speed > max {
                out.push(Finding::ActorSpeed { actor: a.id.clone(), actor_type: a.actor_type, speed, max });
            }
        }
        if let Some(allowed) = table.actor_behaviors.get(&a.actor_type) {
            if !allowed.contains(&a.behavior) {
                out.push(Finding::ActorBehavior { actor: a.id.clone(), actor_type: a.actor_type, behavior: a.behavior });
            }
        }
    }

    let env = doc.environment;
    if table.incompatible_environment.iter().any(|p| p.weather == env.weather && p.time == env.time) {
        out.push(Finding::Environment { weather: env.weather, time: env.time });
    }
    for sign in &doc.road_network.traffic_signs {
        for rule in table.incompatible_signs.iter().filter(|r| r.sign == *sign) {
            if rule.road_type == Some(doc.road_network.road_type) {
                out.push(Finding::Sign { sign: *sign, context: format!("road_type {}", doc.road_network.road_type) });
            }
            if rule.weather == Some(env.weather) {
                out.push(Finding::Sign { sign: *sign, context: format!("weather {}", env.weather) });
            }
        }
    }
    out
}

/// Scene conditions one context tag demands. Every present key must hold.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Requirement {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weather: Option<Vec<Weather>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<Vec<TimeOfDay>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub road_type: Option<Vec<RoadType>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor_type: Option<Vec<ActorType>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<Vec<TrafficSign>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marker: Option<Vec<RoadMarker>>,
}

impl Requirement {
    pub fn satisfied_by(&self, doc: &SceneDoc) -> bool {
        fn ok<T: PartialEq>(set: &Option<Vec<T>>, f: impl Fn(&[T]) -> bool) -> bool {
            set.as_deref().is_none_or(f)
        }
        let d = doc;
        ok(&self.weather, |w| w.contains(&d.environment.weather))
            && ok(&self.time, |t| t.contains(&d.environment.time))
            && ok(&self.road_type, |r| r.contains(&d.road_network.road_type))
            && ok(&self.actor_type, |t| d.actors.iter().any(|a| t.contains(&a.actor_type)))
            && ok(&self.sign, |s| d.road_network.traffic_signs.iter().any(|x| s.contains(x)))
            && ok(&self.marker, |m| m.contains(&d.road_network.road_marker))
    }
}

/// Context tag → scene requirement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequirementTable(pub BTreeMap<ContextTag, Requirement>);

impl Default for RequirementTable {
    fn default() -> Self {
        Self::from_yaml(DEFAULT_REQUIREMENTS).expect("bundled requirement table parses")
    }
}

impl RequirementTable {
    pub fn from_yaml(text: &str) -> Result<Self, serde_yaml::Error> {
        serde_yaml::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleAlignment {
    pub rule: RuleId,
    pub matched: bool,
    /// Tags whose requirement the scene does not meet.
    pub unmet: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignReport {
    pub rules: Vec<RuleAlignment>,
    pub unmatched: Vec<RuleId>,
}

impl AlignReport {
    pub fn all_matched(&self) -> bool {
        self.unmatched.is_empty()
    }
}

/// Checks that the scene realises every rule's context. Tags without a
/// table entry impose nothing.
pub fn align_check(doc: &SceneDoc, rules: &[&AtomicRule], table: &RequirementTable) -> AlignReport {
    let rules: Vec<RuleAlignment> = rules
        .iter()
        .map(|r| {
            let unmet: Vec<String> = r
                .context_tags
                .iter()
                .filter(|t| table.0.get(*t).is_some_and(|req| !req.satisfied_by(doc)))
                .map(ToString::to_string)
                .collect();
            RuleAlignment { rule: r.id.clone(), matched: unmet.is_empty(), unmet }
        })
        .collect();
    let unmatched = rules.iter().filter(|a| !a.matched).map(|a| a.rule.clone()).collect();
    AlignReport { rules, unmatched }
}
