//! Rule combinations, level labels, coexistence, and the hierarchical rule set.

mod coexistence;
mod combos;
mod hierarchy;
mod labels;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::EndpointError;
use crate::rule_model::{ActionType, AtomicRule, Jurisdiction, RuleId};

pub use coexistence::{
    parse_coexistence_output, render_coexistence_prompt, validate_all, validate_coexistence,
    CoexistenceOracle, ModelCoexistenceOracle, OracleVerdict, TagCompatibilityOracle,
};
pub use combos::{generate_candidate_combos, MAX_COMBO_SIZE, MIN_COMBO_SIZE};
pub use hierarchy::{build_hierarchy, craft_hierarchy, CraftSummary, HierarchicalRuleSet};
pub use labels::{classify, derive_labels, ComboLabels};

/// Position on the five-level ladder, 1 (single rule) to 5 (conflict).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Level(u8);

impl Level {
    pub const L1: Level = Level(1);
    pub const L2: Level = Level(2);
    pub const L3: Level = Level(3);
    pub const L4: Level = Level(4);
    pub const L5: Level = Level(5);
    pub const ALL: [Level; 5] = [Level(1), Level(2), Level(3), Level(4), Level(5)];

    pub fn new(level: u8) -> Option<Level> {
        (1..=5).contains(&level).then_some(Level(level))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for Level {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        Level::new(v).ok_or_else(|| format!("level {v} outside 1..=5"))
    }
}

impl From<Level> for u8 {
    fn from(l: Level) -> u8 {
        l.0
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PerceptualCombo {
    DoubleStatic,
    DoubleDynamic,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormRelation {
    NormHarmony,
    NormConflict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coexistence {
    Unchecked,
    Feasible,
    Infeasible,
}

/// Oracle reasoning retained for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleAudit {
    pub reasoning: String,
    /// Set when the verdict was forced because the oracle output could not be parsed.
    #[serde(default)]
    pub flagged: bool,
}

/// A 1..=5 rule combination with its derived labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleCombo {
    pub members: Vec<RuleId>,
    pub action_type: ActionType,
    #[serde(default)]
    pub perceptual_combo: Option<PerceptualCombo>,
    #[serde(default)]
    pub norm_relation: Option<NormRelation>,
    #[serde(default)]
    pub level: Option<Level>,
    pub coexistence: Coexistence,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<OracleAudit>,
}

impl RuleCombo {
    /// Level-1 entry for an atomic rule.
    pub fn singleton(rule: &AtomicRule) -> Self {
        RuleCombo {
            members: vec![rule.id.clone()],
            action_type: rule.action_type,
            perceptual_combo: None,
            norm_relation: None,
            level: Some(Level::L1),
            coexistence: Coexistence::Feasible,
            audit: None,
        }
    }

    pub fn unchecked(members: Vec<RuleId>, action_type: ActionType) -> Self {
        RuleCombo {
            members,
            action_type,
            perceptual_combo: None,
            norm_relation: None,
            level: None,
            coexistence: Coexistence::Unchecked,
            audit: None,
        }
    }

    /// Member ids joined with `+`; stable and unique per member set.
    pub fn key(&self) -> String {
        let mut ids: Vec<&str> = self.members.iter().map(RuleId::as_str).collect();
        ids.sort_unstable();
        ids.join("+")
    }

    pub fn is_singleton(&self) -> bool {
        self.members.len() == 1
    }
}

/// Id → rule lookup over one jurisdiction's rules.
#[derive(Debug, Clone)]
pub struct RuleIndex<'a> {
    by_id: HashMap<&'a RuleId, &'a AtomicRule>,
}

impl<'a> RuleIndex<'a> {
    pub fn new(rules: &'a [AtomicRule]) -> Self {
        RuleIndex { by_id: rules.iter().map(|r| (&r.id, r)).collect() }
    }

    pub fn get(&self, id: &RuleId) -> Option<&'a AtomicRule> {
        self.by_id.get(id).copied()
    }

    pub fn members(&self, combo: &RuleCombo) -> Result<Vec<&'a AtomicRule>, CraftError> {
        combo
            .members
            .iter()
            .map(|id| self.get(id).ok_or_else(|| CraftError::UnknownRule(id.clone())))
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum CraftError {
    #[error("rules span several jurisdictions ({0} and {1}); combinations never mix countries")]
    MixedJurisdictions(Jurisdiction, Jurisdiction),
    #[error("combination size {0} outside 2..=5")]
    ComboSize(usize),
    #[error("label derivation needs at least two members, got {0}")]
    SingletonCombo(usize),
    #[error("members of {0} do not share one action type")]
    MixedActionTypes(String),
    #[error("speed_limit rule {0} has no speed range")]
    MissingSpeedRange(RuleId),
    #[error("unknown rule id {0}")]
    UnknownRule(RuleId),
    #[error("combination {0} has no derived labels")]
    Unlabeled(String),
    #[error("coexistence oracle failed for {combo}: {source}")]
    Oracle { combo: String, source: EndpointError },
    #[error("hierarchy export is inconsistent: {0}")]
    InvalidExport(String),
}
