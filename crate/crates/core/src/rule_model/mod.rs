//! Atomic traffic rules and their closed vocabularies.

mod action;
mod file;
mod priority;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use action::{ActionCategory, ActionType};
pub use file::{
    parse_rule_file, parse_rule_file_with, serialize_rule_file, validate_rule, RuleFileError,
    RuleFileOptions, RuleRecord, SpeedBounds, Violation, ViolationKind,
};
pub use priority::PriorityClass;

/// Default upper bound for open-ended speed rules ("min 110 km/h"), in km/h.
pub const DEFAULT_JURISDICTION_MAX_SPEED: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleId(pub String);

impl RuleId {
    pub fn new(id: impl Into<String>) -> Self {
        RuleId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// What triggers a rule: fixed infrastructure or interacting agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerceptualType {
    Static,
    Dynamic,
}

/// Deontic status of the governed action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormType {
    Permissive,
    Obligatory,
    Forbidden,
}

impl PerceptualType {
    pub const ALL: [PerceptualType; 2] = [PerceptualType::Static, PerceptualType::Dynamic];

    pub fn as_str(self) -> &'static str {
        match self {
            PerceptualType::Static => "static",
            PerceptualType::Dynamic => "dynamic",
        }
    }
}

impl NormType {
    pub const ALL: [NormType; 3] = [NormType::Permissive, NormType::Obligatory, NormType::Forbidden];

    pub fn as_str(self) -> &'static str {
        match self {
            NormType::Permissive => "permissive",
            NormType::Obligatory => "obligatory",
            NormType::Forbidden => "forbidden",
        }
    }
}

impl FromStr for PerceptualType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|v| v.as_str() == s).ok_or_else(|| s.to_string())
    }
}

impl FromStr for NormType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|v| v.as_str() == s).ok_or_else(|| s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Jurisdiction {
    #[serde(rename = "USA")]
    Usa,
    China,
    #[serde(rename = "UK")]
    Uk,
    Japan,
    Australia,
}

impl Jurisdiction {
    pub const ALL: [Jurisdiction; 5] = [
        Jurisdiction::Usa,
        Jurisdiction::China,
        Jurisdiction::Uk,
        Jurisdiction::Japan,
        Jurisdiction::Australia,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Jurisdiction::Usa => "USA",
            Jurisdiction::China => "China",
            Jurisdiction::Uk => "UK",
            Jurisdiction::Japan => "Japan",
            Jurisdiction::Australia => "Australia",
        }
    }
}

impl FromStr for Jurisdiction {
    type Err = String;

    /// Case-insensitive.
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|j| j.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| s.to_string())
    }
}

impl fmt::Display for Jurisdiction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Closed speed interval in km/h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedRange {
    pub lower: f64,
    pub upper: f64,
}

impl SpeedRange {
    pub fn new(lower: f64, upper: f64) -> Self {
        SpeedRange { lower, upper }
    }

    pub fn is_valid(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite() && self.lower >= 0.0 && self.lower <= self.upper
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn intersect(&self, other: &SpeedRange) -> Option<SpeedRange> {
        let lower = self.lower.max(other.lower);
        let upper = self.upper.min(other.upper);
        (lower <= upper).then_some(SpeedRange { lower, upper })
    }

    /// Intersection of every range; `None` when empty or when `ranges` is.
    pub fn intersect_all<'a>(ranges: impl IntoIterator<Item = &'a SpeedRange>) -> Option<SpeedRange> {
        let mut iter = ranges.into_iter();
        let first = *iter.next()?;
        iter.try_fold(first, |acc, r| acc.intersect(r))
    }
}

/// Namespaced situational attribute, `namespace:value` (e.g. `weather:fog`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ContextTag {
    namespace: String,
    value: String,
}

impl ContextTag {
    pub fn new(namespace: &str, value: &str) -> Self {
        ContextTag { namespace: namespace.to_string(), value: value.to_string() }
    }

    pub fn namespace(&self) -> &str {
        &self.namespace
    }

    pub fn value(&self) -> &str {
        &self.value
    }
}

impl FromStr for ContextTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (ns, value) = s.split_once(':').ok_or_else(|| s.to_string())?;
        let ok = |part: &str| {
            !part.is_empty()
                && part.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
        };
        if ok(ns) && ok(value) {
            Ok(ContextTag::new(ns, value))
        } else {
            Err(s.to_string())
        }
    }
}

impl TryFrom<String> for ContextTag {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<ContextTag> for String {
    fn from(t: ContextTag) -> String {
        t.to_string()
    }
}

impl fmt::Display for ContextTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.namespace, self.value)
    }
}

/// One structured "situation → action" rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicRule {
    pub id: RuleId,
    pub content: String,
    pub perceptual_type: PerceptualType,
    pub norm_type: NormType,
    pub action_type: ActionType,
    pub speed_range: Option<SpeedRange>,
    pub priority_class: PriorityClass,
    pub jurisdiction: Jurisdiction,
    pub context_tags: BTreeSet<ContextTag>,
}

impl AtomicRule {
    /// Invariants that the typed representation does not already enforce.
    pub fn check_invariants(&self) -> Result<(), String> {
        match (self.action_type.is_speed(), &self.speed_range) {
            (true, None) => Err(format!("rule {}: speed_limit rule without speed range", self.id)),
            (false, Some(_)) => Err(format!("rule {}: speed range on {} rule", self.id, self.action_type)),
            (true, Some(r)) if !r.is_valid() => {
                Err(format!("rule {}: invalid speed range [{}, {}]", self.id, r.lower, r.upper))
            }
            _ => Ok(()),
        }
    }
}
