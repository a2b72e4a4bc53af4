//! Multiple-choice question synthesis: ground truth, prompts, assembly and gating.

mod arbitration;
mod assemble;
mod classify;
mod gates;
mod pipeline;
mod render;
pub mod stub;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::EndpointError;
use crate::rule_crafter::{CraftError, Level};
use crate::rule_model::{Jurisdiction, PriorityClass, RuleId};

pub use arbitration::{determine_correct_action, ActionDescriptor, Directive};
pub use assemble::{assemble_mcq, extract_json_object, GeneratedQuestion, Provenance};
pub use classify::{consistent_options, option_consistent};
pub use gates::{
    consensus_validate, parse_judge_output, parse_score, quality_score, review_sample_size,
    sample_for_human_review, QualityScore, QualityStage, ValidationVerdict, QUALITY_THRESHOLD,
};
pub use pipeline::{
    generate_questions, question_id, AuditEvent, AuditRecord, GenerationConfig, GenerationEndpoints, GenerationOutcome,
    ReviewItem, ReviewReason,
};
pub use render::{prompt_text, render_generation_prompt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OptionKey {
    A,
    B,
    C,
    D,
}

impl OptionKey {
    pub const ALL: [OptionKey; 4] = [OptionKey::A, OptionKey::B, OptionKey::C, OptionKey::D];

    pub fn as_str(self) -> &'static str {
        match self {
            OptionKey::A => "A",
            OptionKey::B => "B",
            OptionKey::C => "C",
            OptionKey::D => "D",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for OptionKey {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        OptionKey::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| s.to_string())
    }
}

impl fmt::Display for OptionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exactly four answer options.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(rename = "A")]
    pub a: String,
    #[serde(rename = "B")]
    pub b: String,
    #[serde(rename = "C")]
    pub c: String,
    #[serde(rename = "D")]
    pub d: String,
}

impl Options {
    pub fn get(&self, key: OptionKey) -> &str {
        match key {
            OptionKey::A => &self.a,
            OptionKey::B => &self.b,
            OptionKey::C => &self.c,
            OptionKey::D => &self.d,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (OptionKey, &str)> {
        OptionKey::ALL.into_iter().map(move |k| (k, self.get(k)))
    }

    pub fn from_array([a, b, c, d]: [String; 4]) -> Self {
        Options { a, b, c, d }
    }
}

/// One benchmark question. The prompt-schema fields keep the names used in
/// the generation prompts so dataset files are readable next to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mcq {
    pub id: String,
    pub level: Level,
    pub jurisdiction: Jurisdiction,
    pub num_rules: usize,
    pub rule_ids: Vec<RuleId>,
    #[serde(rename = "Scenario Description")]
    pub scenario_description: String,
    #[serde(rename = "Question Stem")]
    pub question_stem: String,
    #[serde(rename = "Options")]
    pub options: Options,
    #[serde(rename = "Question Design Logic")]
    pub design_logic: String,
    #[serde(rename = "Correct Answer Option")]
    pub correct_option: OptionKey,
    #[serde(rename = "Explanation of the Correct Answer")]
    pub explanation: String,
    /// Four pre-rendered frames, when available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_refs: Option<Vec<String>>,
    /// Textual scene description used by the text variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_text: Option<String>,
}

impl Mcq {
    pub fn check_invariants(&self) -> Result<(), McqError> {
        let bad = |m: &str| Err(McqError::Invalid { id: self.id.clone(), message: m.to_string() });
        if self.num_rules != self.rule_ids.len() || !(1..=5).contains(&self.num_rules) {
            return bad("num_rules must equal the number of rule ids (1..=5)");
        }
        if (self.level == Level::L1) != (self.num_rules == 1) {
            return bad("level 1 questions have exactly one rule");
        }
        if let Some(frames) = &self.frame_refs {
            if frames.len() != 4 {
                return bad("frame_refs must list four frames");
            }
        }
        if self.question_stem.trim().is_empty() || self.scenario_description.trim().is_empty() {
            return bad("empty scenario or stem");
        }
        Ok(())
    }

    pub fn to_jsonl(questions: &[Mcq]) -> String {
        questions.iter().map(|q| serde_json::to_string(q).expect("mcq serializes") + "\n").collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Vec<Mcq>, McqError> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let q: Mcq = serde_json::from_str(l).map_err(|e| McqError::Dataset { line: i + 1, message: e.to_string() })?;
                q.check_invariants()?;
                Ok(q)
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum McqError {
    #[error("{class} is shared by the top-priority rules {rules:?}; no strict winner")]
    SamePriorityTie { class: PriorityClass, rules: Vec<RuleId> },
    #[error("combination {0} is not feasible")]
    NotFeasible(String),
    #[error("prompt level {requested} does not match combination level {actual}")]
    LevelMismatch { requested: Level, actual: Level },
    #[error("generator output violates the question schema: {0}")]
    Schema(String),
    #[error("correct option mismatch: generator claims {claimed}, arbitration supports {supported:?}")]
    CrossCheck { claimed: OptionKey, supported: Vec<OptionKey> },
    #[error("scorer output rejected after retries: {0}")]
    ScoreRejected(String),
    #[error("question {id}: {message}")]
    Invalid { id: String, message: String },
    #[error("dataset line {line}: {message}")]
    Dataset { line: usize, message: String },
    #[error(transparent)]
    Endpoint(#[from] EndpointError),
    #[error(transparent)]
    Craft(#[from] CraftError),
}
