//! Evaluation runs: one record per (question, repeat), never dropped.

use serde::{Deserialize, Serialize};

use super::extract::extract_choice;
use super::prompt::{build_prompt, Condition, PromptContext, Variant};
use super::EvalError;
use crate::llm::{complete_with_retry, ChatEndpoint};
use crate::mcq::{Mcq, OptionKey};

pub const MAX_REPEATS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub question_id: String,
    /// 1-based.
    pub repeat: u32,
    pub condition: Condition,
    pub raw_response: String,
    pub extracted_choice: Option<OptionKey>,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<u64>,
    /// Transport failure after the retry budget; scored incorrect.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EvalRecord {
    pub fn is_flagged(&self) -> bool {
        self.error.is_some()
    }

    pub fn to_jsonl(records: &[EvalRecord]) -> String {
        records.iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Vec<EvalRecord>, EvalError> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| EvalError::Records { line: i + 1, message: e.to_string() }))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub repeats: u32,
    pub concurrency: usize,
    pub transport_attempts: u32,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { repeats: 3, concurrency: 4, transport_attempts: 3 }
    }
}

/// Questions are evaluated in id order; records come back ordered by
/// (question id, repeat) whatever the concurrency.
pub fn run_evaluation(
    questions: &[Mcq],
    endpoint: &dyn ChatEndpoint,
    condition: Condition,
    ctx: &PromptContext<'_>,
    cfg: &EvalConfig,
) -> Result<Vec<EvalRecord>, EvalError> {
    if !(1..=MAX_REPEATS).contains(&cfg.repeats) {
        return Err(EvalError::Repeats(cfg.repeats));
    }
    if condition.variant == Variant::Visual && !endpoint.supports_images() {
        return Err(EvalError::TextOnlyEndpoint);
    }
    let mut sorted: Vec<&Mcq> = questions.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut jobs = Vec::with_capacity(sorted.len() * cfg.repeats as usize);
    for q in sorted {
        for repeat in 1..=cfg.repeats {
            jobs.push((q, repeat, build_prompt(q, condition, ctx, repeat)?));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.concurrency.max(1))
        .build()
        .map_err(|e| EvalError::Io(e.to_string()))?;
    let records = pool.install(|| {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|(q, repeat, req)| match complete_with_retry(endpoint, req, cfg.transport_attempts) {
                Ok(resp) => {
                    let choice = extract_choice(&resp.text);
                    EvalRecord {
                        question_id: q.id.clone(),
                        repeat: *repeat,
                        condition,
                        correct: choice == Some(q.correct_option),
                        extracted_choice: choice,
                        raw_response: resp.text,
                        latency_ms: resp.latency_ms,
                        error: None,
                    }
                }
                Err(e) => EvalRecord {
                    question_id: q.id.clone(),
                    repeat: *repeat,
                    condition,
                    raw_response: String::new(),
                    extracted_choice: None,
                    correct: false,
                    latency_ms: None,
                    error: Some(e.to_string()),
                },
            })
            .collect()
    });
    Ok(records)
}
