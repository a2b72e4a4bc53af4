//! Per-jurisdiction rule files.
//!
//! A rule file is a YAML sequence of records:
//!
//! ```yaml
//! - id: usa-speed-fog
//!   content: When visibility falls below 50 m, the driver must not exceed 30 km/h.
//!   perceptual_type: static
//!   norm_type: obligatory
//!   action_type: speed_limit
//!   numeric_constraints: { lower: 0, upper: 30 }
//!   priority_class: traffic_signs
//!   context_tags: [weather:fog]
//! ```
//!
//! `numeric_constraints` is present exactly on `speed_limit` rules. A missing
//! `upper` stands for the jurisdiction maximum, a missing `lower` for 0.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    ActionType, AtomicRule, ContextTag, Jurisdiction, NormType, PerceptualType, PriorityClass,
    RuleId, SpeedRange, DEFAULT_JURISDICTION_MAX_SPEED,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedBounds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

/// Unvalidated rule record, exactly as it appears in a rule file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleRecord {
    pub id: String,
    pub content: String,
    pub perceptual_type: String,
    pub norm_type: String,
    pub action_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric_constraints: Option<SpeedBounds>,
    pub priority_class: String,
    #[serde(default)]
    pub context_tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    EmptyField,
    UnknownToken(String),
    MalformedTag(String),
    /// lower > upper
    IntervalOrder { lower: f64, upper: f64 },
    NegativeBound(f64),
    NonFiniteBound,
    SpeedRangeOnNonSpeedRule,
    MissingSpeedRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::EmptyField => write!(f, "{}: must not be empty", self.field),
            ViolationKind::UnknownToken(t) => write!(f, "{}: unknown token `{t}`", self.field),
            ViolationKind::MalformedTag(t) => {
                write!(f, "{}: `{t}` is not a namespace:value tag", self.field)
            }
            ViolationKind::IntervalOrder { lower, upper } => {
                write!(f, "{}: lower bound {lower} exceeds upper bound {upper}", self.field)
            }
            ViolationKind::NegativeBound(v) => write!(f, "{}: negative bound {v}", self.field),
            ViolationKind::NonFiniteBound => write!(f, "{}: bounds must be finite", self.field),
            ViolationKind::SpeedRangeOnNonSpeedRule => {
                write!(f, "{}: only speed_limit rules carry numeric constraints", self.field)
            }
            ViolationKind::MissingSpeedRange => {
                write!(f, "{}: speed_limit rules require numeric constraints", self.field)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RuleFileOptions {
    /// Substituted for a missing upper bound.
    pub max_speed: f64,
}

impl Default for RuleFileOptions {
    fn default() -> Self {
        RuleFileOptions { max_speed: DEFAULT_JURISDICTION_MAX_SPEED }
    }
}

#[derive(Debug, Error)]
pub enum RuleFileError {
    #[error("rule file syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("rule file must be a sequence of records")]
    NotASequence,
    #[error("record {index}: malformed ({message})")]
    MalformedRecord { index: usize, message: String },
    #[error("record {index} ({id}): {}", join_violations(.violations))]
    Invalid { index: usize, id: String, violations: Vec<Violation> },
    #[error("record {index}: duplicate id `{id}`")]
    DuplicateId { index: usize, id: String },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Check a record against every rule invariant. Violations are data; an
/// empty list means the record converts cleanly.
pub fn validate_rule(record: &RuleRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field, kind| out.push(Violation { field, kind });

    if record.id.trim().is_empty() {
        push("id", ViolationKind::EmptyField);
    }
    if record.content.trim().is_empty() {
        push("content", ViolationKind::EmptyField);
    }
    if record.perceptual_type.parse::<PerceptualType>().is_err() {
        push("perceptual_type", ViolationKind::UnknownToken(record.perceptual_type.clone()));
    }
    if record.norm_type.parse::<NormType>().is_err() {
        push("norm_type", ViolationKind::UnknownToken(record.norm_type.clone()));
    }
    if record.priority_class.parse::<PriorityClass>().is_err() {
        push("priority_class", ViolationKind::UnknownToken(record.priority_class.clone()));
    }
    for tag in &record.context_tags {
        if tag.parse::<ContextTag>().is_err() {
            push("context_tags", ViolationKind::MalformedTag(tag.clone()));
        }
    }
    match record.action_type.parse::<ActionType>() {
        Err(token) => push("action_type", ViolationKind::UnknownToken(token)),
        Ok(action) => match (&record.numeric_constraints, action.is_speed()) {
            (Some(_), false) => push("numeric_constraints", ViolationKind::SpeedRangeOnNonSpeedRule),
            (None, true) => push("numeric_constraints", ViolationKind::MissingSpeedRange),
            (Some(b), true) => {
                let lower = b.lower.unwrap_or(0.0);
                let upper = b.upper.unwrap_or(f64::INFINITY);
                if !lower.is_finite() || upper.is_nan() || b.upper.is_some_and(|u| !u.is_finite()) {
                    push("numeric_constraints", ViolationKind::NonFiniteBound);
                } else if lower < 0.0 {
                    push("numeric_constraints", ViolationKind::NegativeBound(lower));
                } else if lower > upper {
                    push("numeric_constraints", ViolationKind::IntervalOrder { lower, upper });
                }
            }
            (None, false) => {}
        },
    }
    out
}

impl RuleRecord {
    fn into_rule(
        self,
        jurisdiction: Jurisdiction,
        opts: &RuleFileOptions,
    ) -> Result<AtomicRule, Vec<Violation>> {
        let violations = validate_rule(&self);
        if !violations.is_empty() {
            return Err(violations);
        }
        let action_type: ActionType = self.action_type.parse().expect("validated");
        let speed_range = match self.numeric_constraints {
            Some(b) => {
                let range = SpeedRange::new(b.lower.unwrap_or(0.0), b.upper.unwrap_or(opts.max_speed));
                if !range.is_valid() {
                    // only reachable when the configured maximum undercuts `lower`
                    return Err(vec![Violation {
                        field: "numeric_constraints",
                        kind: ViolationKind::IntervalOrder { lower: range.lower, upper: range.upper },
                    }]);
                }
                Some(range)
            }
            None => None,
        };
        Ok(AtomicRule {
            id: RuleId(self.id),
            content: self.content,
            perceptual_type: self.perceptual_type.parse().expect("validated"),
            norm_type: self.norm_type.parse().expect("validated"),
            action_type,
            speed_range,
            priority_class: self.priority_class.parse().expect("validated"),
            jurisdiction,
            context_tags: self
                .context_tags
                .iter()
                .map(|t| t.parse().expect("validated"))
                .collect::<BTreeSet<_>>(),
        })
    }

    pub fn from_rule(rule: &AtomicRule) -> Self {
        RuleRecord {
            id: rule.id.0.clone(),
            content: rule.content.clone(),
            perceptual_type: rule.perceptual_type.as_str().to_string(),
            norm_type: rule.norm_type.as_str().to_string(),
            action_type: rule.action_type.as_str().to_string(),
            numeric_constraints: rule
                .speed_range
                .map(|r| SpeedBounds { lower: Some(r.lower), upper: Some(r.upper) }),
            priority_class: rule.priority_class.as_str().to_string(),
            context_tags: rule.context_tags.iter().map(|t| t.to_string()).collect(),
        }
    }
}

pub fn parse_rule_file(bytes: &[u8], jurisdiction: Jurisdiction) -> Result<Vec<AtomicRule>, RuleFileError> {
    parse_rule_file_with(bytes, jurisdiction, &RuleFileOptions::default())
}

pub fn parse_rule_file_with(
    bytes: &[u8],
    jurisdiction: Jurisdiction,
    opts: &RuleFileOptions,
) -> Result<Vec<AtomicRule>, RuleFileError> {
    let doc: serde_yaml::Value = serde_yaml::from_slice(bytes).map_err(|e| {
        let (line, column) = e.location().map(|l| (l.line(), l.column())).unwrap_or((0, 0));
        RuleFileError::Syntax { line, column, message: e.to_string() }
    })?;
    let items = match doc {
        serde_yaml::Value::Null => return Ok(Vec::new()),
        serde_yaml::Value::Sequence(items) => items,
        _ => return Err(RuleFileError::NotASequence),
    };

    let mut seen = HashSet::new();
    let mut rules = Vec::with_capacity(items.len());
    for (index, item) in items.into_iter().enumerate() {
        let record: RuleRecord = serde_yaml::from_value(item)
            .map_err(|e| RuleFileError::MalformedRecord { index, message: e.to_string() })?;
        if !seen.insert(record.id.clone()) {
            return Err(RuleFileError::DuplicateId { index, id: record.id });
        }
        let id = record.id.clone();
        let rule = record
            .into_rule(jurisdiction, opts)
            .map_err(|violations| RuleFileError::Invalid { index, id, violations })?;
        rules.push(rule);
    }
    Ok(rules)
}

pub fn serialize_rule_file(rules: &[AtomicRule]) -> String {
    let records: Vec<RuleRecord> = rules.iter().map(RuleRecord::from_rule).collect();
    serde_yaml::to_string(&records).expect("rule records always serialize")
}
