//! Evaluation harness: split, prompt, run, extract, report.

mod extract;
mod prompt;
mod report;
mod retrieval;
mod run;
mod split;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::llm::{ChatEndpoint, ChatResponse, EndpointError, FnEndpoint};
use crate::mcq::{Mcq, OptionKey};

pub use extract::extract_choice;
pub use prompt::{
    build_prompt, derive_text_variant, retrieval_query, Condition, DirFrameLoader, FrameLoader, PromptContext, Variant,
    COT_INSTRUCTION, FRAME_COUNT, RAG_HEADER, RAG_TOP_K,
};
pub use report::{compute_report, format_pct, Dimension, Report, ReportRow, Tally};
pub use retrieval::{chunk_rulebook, Bm25Retriever, Passage, Retriever};
pub use run::{run_evaluation, EvalConfig, EvalRecord, MAX_REPEATS};
pub use split::{split_dataset, BenchmarkSplit, SplitWarning, TEST_FRACTION};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no questions to split")]
    EmptyDataset,
    #[error("question {0} has no scene text for the text variant")]
    MissingSceneText(String),
    #[error("question {0} lacks the four frames the visual variant needs")]
    MissingFrames(String),
    #[error("frame: {0}")]
    Frame(String),
    #[error("retrieval requested but no rule-book corpus is loaded")]
    NoRetriever,
    #[error("endpoint does not accept images; use the text variant")]
    TextOnlyEndpoint,
    #[error("repeats must be between 1 and 3, got {0}")]
    Repeats(u32),
    #[error("record references unknown question {0}")]
    UnknownQuestion(String),
    #[error("records mix conditions: {}", .0.join(", "))]
    MixedConditions(Vec<String>),
    #[error("no records: every stratum is empty")]
    EmptyReport,
    #[error("records line {line}: {message}")]
    Records { line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

/// Stub answering every question with its gold option.
pub fn answer_key_endpoint(questions: &[Mcq]) -> impl ChatEndpoint {
    let key: BTreeMap<String, OptionKey> = questions.iter().map(|q| (q.id.clone(), q.correct_option)).collect();
    FnEndpoint::new(move |req| {
        let tag = req.tag.as_ref().ok_or_else(|| EndpointError::ReplayMiss("untagged request".into()))?;
        key.get(&tag.item_id)
            .map(|k| ChatResponse::text(format!("Answer: {k}")))
            .ok_or_else(|| EndpointError::ReplayMiss(tag.item_id.clone()))
    })
    .accepting_images()
}

/// Stub giving the same answer text to everything.
pub fn constant_endpoint(answer: impl Into<String>) -> impl ChatEndpoint {
    let answer = answer.into();
    FnEndpoint::new(move |_| Ok(ChatResponse::text(answer.clone()))).accepting_images()
}
