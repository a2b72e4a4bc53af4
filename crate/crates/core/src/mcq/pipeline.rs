use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    assemble_mcq, consensus_validate, determine_correct_action, prompt_text, quality_score,
    render_generation_prompt, sample_for_human_review, Mcq, McqError, Provenance, QualityScore,
    QualityStage, ValidationVerdict, QUALITY_THRESHOLD,
};
use crate::llm::{complete_with_retry, ChatEndpoint};
use crate::rule_crafter::{HierarchicalRuleSet, RuleCombo, RuleIndex};

pub struct GenerationEndpoints {
    pub generator: Arc<dyn ChatEndpoint>,
    pub judges: [Arc<dyn ChatEndpoint>; 3],
    pub scorers: [Arc<dyn ChatEndpoint>; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationConfig {
    /// Generation attempts per question before the entry is skipped.
    pub attempts: u32,
    /// Tries per request on retriable transport failures.
    pub transport_attempts: u32,
    pub seed: u64,
    pub concurrency: usize,
    /// Quality means strictly below this are queued for review.
    pub quality_threshold: f64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig { attempts: 3, transport_attempts: 3, seed: 0, concurrency: 4, quality_threshold: QUALITY_THRESHOLD }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditEvent {
    Accepted,
    SchemaRejected,
    CrossCheckRejected,
    ConsensusRejected,
    Exhausted,
    Skipped,
    EndpointFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub item: String,
    pub attempt: u32,
    pub event: AuditEvent,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<ValidationVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<QualityScore>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewReason {
    QualityFlagged,
    ScoringFailed,
    RandomSample,
}

/// One line of the human-review queue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub id: String,
    pub reason: ReviewReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<QualityScore>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerationOutcome {
    /// Sorted by id.
    pub accepted: Vec<Mcq>,
    pub audit: Vec<AuditRecord>,
    pub review_queue: Vec<ReviewItem>,
    pub attempted: usize,
}

/// Question id for a hierarchy entry: `<jurisdiction>-L<level>-<member ids>`.
pub fn question_id(set: &HierarchicalRuleSet, combo: &RuleCombo) -> String {
    let level = combo.level.map(|l| l.to_string()).unwrap_or_else(|| "L?".into());
    format!("{}-{}-{}", set.jurisdiction, level, combo.key())
}

struct ItemResult {
    accepted: Option<Mcq>,
    audit: Vec<AuditRecord>,
    review: Vec<ReviewItem>,
}

fn record(item: &str, attempt: u32, event: AuditEvent, detail: impl Into<String>) -> AuditRecord {
    AuditRecord { item: item.to_string(), attempt, event, detail: detail.into(), verdict: None, quality: None }
}

fn process(
    set: &HierarchicalRuleSet,
    rules: &RuleIndex<'_>,
    combo: &RuleCombo,
    endpoints: &GenerationEndpoints,
    cfg: &GenerationConfig,
) -> ItemResult {
    let id = question_id(set, combo);
    let mut out = ItemResult { accepted: None, audit: Vec::new(), review: Vec::new() };
    let level = combo.level.expect("hierarchy entries are labeled");

    let descriptor = match determine_correct_action(combo, rules) {
        Ok(d) => d,
        Err(e) => {
            out.audit.push(record(&id, 0, AuditEvent::Skipped, e.to_string()));
            return out;
        }
    };
    let request = match render_generation_prompt(combo, rules, level) {
        Ok(r) => r,
        Err(e) => {
            out.audit.push(record(&id, 0, AuditEvent::Skipped, e.to_string()));
            return out;
        }
    };
    let provenance = Provenance { id: id.clone(), level, jurisdiction: set.jurisdiction, rule_ids: combo.members.clone() };
    let judges = [endpoints.judges[0].as_ref(), endpoints.judges[1].as_ref(), endpoints.judges[2].as_ref()];
    let scorers = [endpoints.scorers[0].as_ref(), endpoints.scorers[1].as_ref(), endpoints.scorers[2].as_ref()];

    for attempt in 1..=cfg.attempts.max(1) {
        let req = request.clone().with_tag(id.clone(), attempt);
        let text = match complete_with_retry(endpoints.generator.as_ref(), &req, cfg.transport_attempts) {
            Ok(r) => r.text,
            Err(e) => {
                out.audit.push(record(&id, attempt, AuditEvent::EndpointFailure, format!("generator: {e}")));
                return out;
            }
        };
        let mcq = match assemble_mcq(&text, &descriptor, &provenance) {
            Ok(q) => q,
            Err(e @ McqError::CrossCheck { .. }) => {
                out.audit.push(record(&id, attempt, AuditEvent::CrossCheckRejected, e.to_string()));
                continue;
            }
            Err(e) => {
                out.audit.push(record(&id, attempt, AuditEvent::SchemaRejected, e.to_string()));
                continue;
            }
        };
        let verdict = match consensus_validate(&mcq, &judges, cfg.transport_attempts) {
            Ok(v) => v,
            Err(e) => {
                out.audit.push(record(&id, attempt, AuditEvent::EndpointFailure, format!("judge: {e}")));
                return out;
            }
        };
        if !verdict.accepted {
            let mut r = record(&id, attempt, AuditEvent::ConsensusRejected, "not unanimous");
            r.verdict = Some(verdict);
            out.audit.push(r);
            continue;
        }
        let mut r = record(&id, attempt, AuditEvent::Accepted, "");
        r.verdict = Some(verdict);
        match quality_score(
            QualityStage::Transcription,
            &id,
            &prompt_text(&request),
            &mcq.scenario_description,
            &scorers,
            cfg.transport_attempts,
        ) {
            Ok(q) => {
                let q = QualityScore { flagged: q.mean < cfg.quality_threshold, ..q };
                if q.flagged {
                    out.review.push(ReviewItem { id: id.clone(), reason: ReviewReason::QualityFlagged, quality: Some(q.clone()) });
                }
                r.quality = Some(q);
            }
            Err(e) => {
                r.detail = format!("quality scoring failed: {e}");
                out.review.push(ReviewItem { id: id.clone(), reason: ReviewReason::ScoringFailed, quality: None });
            }
        }
        out.audit.push(r);
        out.accepted = Some(mcq);
        return out;
    }
    out.audit.push(record(&id, cfg.attempts, AuditEvent::Exhausted, "regeneration budget spent"));
    out
}

/// Generates, validates and scores one question per entry of `entries`.
///
/// At most `cfg.concurrency` entries are in flight. Audit records follow the
/// entry order; accepted questions are sorted by id. The review queue lists
/// quality-flagged items followed by the random ⌈5 %⌉ sample.
pub fn generate_questions(
    set: &HierarchicalRuleSet,
    entries: &[RuleCombo],
    endpoints: &GenerationEndpoints,
    cfg: &GenerationConfig,
) -> GenerationOutcome {
    let rules = set.rule_index();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.concurrency.max(1)).build().expect("thread pool");
    let results: Vec<ItemResult> =
        pool.install(|| entries.par_iter().map(|c| process(set, &rules, c, endpoints, cfg)).collect());

    let mut outcome = GenerationOutcome { attempted: entries.len(), ..Default::default() };
    for r in results {
        outcome.audit.extend(r.audit);
        outcome.review_queue.extend(r.review);
        outcome.accepted.extend(r.accepted);
    }
    outcome.accepted.sort_by(|a, b| a.id.cmp(&b.id));
    for q in sample_for_human_review(&outcome.accepted, cfg.seed) {
        outcome.review_queue.push(ReviewItem { id: q.id, reason: ReviewReason::RandomSample, quality: None });
    }
    outcome
}
