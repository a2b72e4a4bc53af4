use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Mcq, McqError};
use crate::llm::{complete_with_retry, ChatEndpoint, ChatRequest, EndpointError};
use crate::prompts;

pub const QUALITY_THRESHOLD: f64 = 0.6;

/// Outcome of the three-judge check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    pub decisions: [u8; 3],
    pub reasoning: [String; 3],
    pub accepted: bool,
}

impl ValidationVerdict {
    pub fn new(decisions: [u8; 3], reasoning: [String; 3]) -> Self {
        ValidationVerdict { accepted: decisions.iter().all(|d| *d == 1), decisions, reasoning }
    }
}

/// Reads `Output Decision: 0|1` (or a bare leading digit) and the reasoning.
pub fn parse_judge_output(text: &str) -> Option<(u8, String)> {
    let lower = text.to_ascii_lowercase();
    let rest = match lower.find("output decision:") {
        Some(i) => &text[i + "output decision:".len()..],
        None => text,
    };
    let rest = rest.trim_start_matches(|c: char| c.is_whitespace() || c == '*');
    let mut chars = rest.chars();
    let d = match chars.next()? {
        '0' => 0,
        '1' => 1,
        _ => return None,
    };
    if chars.next().is_some_and(|c| c.is_ascii_digit()) {
        return None;
    }
    let reasoning = match lower.find("output reasoning:") {
        Some(i) => text[i + "output reasoning:".len()..].trim().to_string(),
        None => text.trim().to_string(),
    };
    Some((d, reasoning))
}

fn question_json(mcq: &Mcq) -> String {
    let value = serde_json::json!({
        "Scenario Description": mcq.scenario_description,
        "Question Stem": mcq.question_stem,
        "Options": mcq.options,
        "Question Design Logic": mcq.design_logic,
        "Correct Answer Option": mcq.correct_option,
        "Explanation of the Correct Answer": mcq.explanation,
    });
    serde_json::to_string_pretty(&value).expect("json")
}

/// Asks three judges; accepted only when all three answer 1. A reply that
/// cannot be read counts as 0 for that judge.
pub fn consensus_validate(
    mcq: &Mcq,
    judges: &[&dyn ChatEndpoint; 3],
    transport_attempts: u32,
) -> Result<ValidationVerdict, EndpointError> {
    let user = format!("Input Question Json:\n{}\n\nOutput Decision:", question_json(mcq));
    let mut decisions = [0u8; 3];
    let mut reasoning: [String; 3] = Default::default();
    for (i, judge) in judges.iter().enumerate() {
        let req = ChatRequest::new(prompts::MCQ_CHECK, user.clone()).with_tag(mcq.id.clone(), i as u32 + 1);
        let resp = complete_with_retry(*judge, &req, transport_attempts)?;
        match parse_judge_output(&resp.text) {
            Some((d, r)) => {
                decisions[i] = d;
                reasoning[i] = r;
            }
            None => reasoning[i] = format!("unparseable: {}", resp.text.trim()),
        }
    }
    Ok(ValidationVerdict::new(decisions, reasoning))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QualityStage {
    SemanticStructuring,
    Coexistence,
    Transcription,
    DslTranslation,
}

impl QualityStage {
    pub fn template(self) -> &'static str {
        match self {
            QualityStage::SemanticStructuring => prompts::QUALITY_SEMANTIC_STRUCTURING,
            QualityStage::Coexistence => prompts::QUALITY_COEXISTENCE,
            QualityStage::Transcription => prompts::QUALITY_TRANSCRIPTION,
            QualityStage::DslTranslation => prompts::QUALITY_DSL_TRANSLATION,
        }
    }

    fn label(self) -> &'static str {
        match self {
            QualityStage::SemanticStructuring => "Semantic Structuring",
            QualityStage::Coexistence => "Coexistence Validation",
            QualityStage::Transcription => "Scenario Transcription",
            QualityStage::DslTranslation => "DSL Translation",
        }
    }
}

/// Mean of three scorer outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub stage: QualityStage,
    pub scores: [f64; 3],
    pub mean: f64,
    pub flagged: bool,
}

impl QualityScore {
    pub fn from_scores(stage: QualityStage, scores: [f64; 3]) -> Self {
        // Scores arrive as short decimals; rounding the mean to 12 places keeps
        // (0.6, 0.6, 0.6) at exactly 0.6 instead of 0.5999…
        let mean = ((scores.iter().sum::<f64>() / 3.0) * 1e12).round() / 1e12;
        QualityScore { stage, scores, mean, flagged: mean < QUALITY_THRESHOLD }
    }
}

/// First number in the reply, if it lies in [0, 1].
pub fn parse_score(text: &str) -> Option<f64> {
    let start = text.find(|c: char| c.is_ascii_digit())?;
    let token: String = text[start..].chars().take_while(|c| c.is_ascii_digit() || *c == '.').collect();
    let v: f64 = token.trim_end_matches('.').parse().ok()?;
    (0.0..=1.0).contains(&v).then_some(v)
}

/// Scores `output` (produced by `prompt`) with three scorers. Out-of-range or
/// unreadable scores are re-requested up to `attempts` times per scorer.
pub fn quality_score(
    stage: QualityStage,
    item_id: &str,
    prompt: &str,
    output: &str,
    scorers: &[&dyn ChatEndpoint; 3],
    attempts: u32,
) -> Result<QualityScore, McqError> {
    let label = stage.label();
    let user = format!("{label} Prompt:\n{prompt}\n\n{label} Output:\n{output}\n\nOutput Score:");
    let mut scores = [0.0; 3];
    for (i, scorer) in scorers.iter().enumerate() {
        let mut last = String::new();
        let mut got = None;
        for attempt in 1..=attempts.max(1) {
            let req = ChatRequest::new(stage.template(), user.clone())
                .with_tag(format!("{item_id}#scorer{}", i + 1), attempt);
            let resp = complete_with_retry(*scorer, &req, attempts)?;
            if let Some(v) = parse_score(&resp.text) {
                got = Some(v);
                break;
            }
            last = resp.text;
        }
        scores[i] = got.ok_or_else(|| McqError::ScoreRejected(format!("scorer {}: {}", i + 1, last.trim())))?;
    }
    Ok(QualityScore::from_scores(stage, scores))
}

/// ⌈5 %⌉ of `n`.
pub fn review_sample_size(n: usize) -> usize {
    n.div_ceil(20)
}

/// Seeded uniform sample without replacement of ⌈5 %⌉ of the accepted
/// questions, returned in input order.
pub fn sample_for_human_review(accepted: &[Mcq], seed: u64) -> Vec<Mcq> {
    let k = review_sample_size(accepted.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, accepted.len(), k).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| accepted[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unanimity() {
        let r: [String; 3] = Default::default();
        assert!(ValidationVerdict::new([1, 1, 1], r.clone()).accepted);
        assert!(!ValidationVerdict::new([1, 1, 0], r.clone()).accepted);
        assert!(!ValidationVerdict::new([0, 0, 0], r).accepted);
    }

    #[test]
    fn quality_examples() {
        let q = QualityScore::from_scores(QualityStage::Transcription, [0.8, 0.6, 0.7]);
        assert_eq!(q.mean, 0.7);
        assert!(!q.flagged);
        let q = QualityScore::from_scores(QualityStage::Transcription, [0.4, 0.5, 0.6]);
        assert_eq!(q.mean, 0.5);
        assert!(q.flagged);
        let q = QualityScore::from_scores(QualityStage::Transcription, [0.6, 0.6, 0.6]);
        assert_eq!(q.mean, 0.6);
        assert!(!q.flagged);
    }

    #[test]
    fn mean_is_permutation_invariant() {
        let s = [0.1, 0.7, 0.35];
        let base = QualityScore::from_scores(QualityStage::Coexistence, s).mean;
        for p in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            assert_eq!(QualityScore::from_scores(QualityStage::Coexistence, [s[p[0]], s[p[1]], s[p[2]]]).mean, base);
        }
    }

    #[test]
    fn judge_and_score_parsing() {
        assert_eq!(parse_judge_output("Output Decision: 1\n\nOutput Reasoning: fine").unwrap(), (1, "fine".into()));
        assert_eq!(parse_judge_output("0 - broken").unwrap().0, 0);
        assert!(parse_judge_output("I think so").is_none());
        assert_eq!(parse_score("0.85"), Some(0.85));
        assert_eq!(parse_score("Score: 1."), Some(1.0));
        assert_eq!(parse_score("1.5"), None);
        assert_eq!(parse_score("none"), None);
    }

    #[test]
    fn sample_sizes() {
        assert_eq!(review_sample_size(100), 5);
        assert_eq!(review_sample_size(1), 1);
        assert_eq!(review_sample_size(21), 2);
        assert_eq!(review_sample_size(0), 0);
    }
}
