use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;

use super::{Coexistence, CraftError, OracleAudit, RuleCombo, RuleIndex};
use crate::llm::{complete_with_retry, ChatEndpoint, ChatRequest, EndpointError};
use crate::prompts;
use crate::rule_model::AtomicRule;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleVerdict {
    pub feasible: bool,
    pub reasoning: String,
    pub flagged: bool,
}

/// Decides whether a set of rules can hold in one place at one time.
pub trait CoexistenceOracle: Send + Sync {
    /// `key` identifies the combination (stable across runs).
    fn assess(&self, key: &str, rules: &[&AtomicRule]) -> Result<OracleVerdict, EndpointError>;
}

/// Offline oracle over context tags: rules are incompatible when they carry
/// different values in the same namespace, except in namespaces where several
/// values naturally co-occur (several agents, several signs).
#[derive(Debug, Clone)]
pub struct TagCompatibilityOracle {
    multi_valued: BTreeSet<String>,
}

impl Default for TagCompatibilityOracle {
    fn default() -> Self {
        Self::with_multi_valued(["agent", "sign"])
    }
}

impl TagCompatibilityOracle {
    pub fn with_multi_valued<S: Into<String>>(namespaces: impl IntoIterator<Item = S>) -> Self {
        TagCompatibilityOracle { multi_valued: namespaces.into_iter().map(Into::into).collect() }
    }
}

impl CoexistenceOracle for TagCompatibilityOracle {
    fn assess(&self, _key: &str, rules: &[&AtomicRule]) -> Result<OracleVerdict, EndpointError> {
        let mut seen: BTreeMap<&str, (&str, &str)> = BTreeMap::new();
        for rule in rules {
            for tag in &rule.context_tags {
                if self.multi_valued.contains(tag.namespace()) {
                    continue;
                }
                match seen.get(tag.namespace()) {
                    Some(&(value, owner)) if value != tag.value() => {
                        return Ok(OracleVerdict {
                            feasible: false,
                            reasoning: format!(
                                "{} requires {}:{} but {} requires {}",
                                owner,
                                tag.namespace(),
                                value,
                                rule.id,
                                tag
                            ),
                            flagged: false,
                        });
                    }
                    Some(_) => {}
                    None => {
                        seen.insert(tag.namespace(), (tag.value(), rule.id.as_str()));
                    }
                }
            }
        }
        Ok(OracleVerdict { feasible: true, reasoning: "no contradictory context tags".into(), flagged: false })
    }
}

/// Chat request asking whether `rules` can coexist.
pub fn render_coexistence_prompt(rules: &[&AtomicRule]) -> ChatRequest {
    let slots = rules
        .iter()
        .enumerate()
        .map(|(i, r)| format!("Input Rule {}: \"{}\"", i + 1, r.content))
        .collect::<Vec<_>>()
        .join("\n");
    ChatRequest::new(prompts::with_count(prompts::COEXISTENCE, rules.len()), format!("{slots}\n\nOutput:"))
}

/// Reads the 0/1 verdict and the reasoning from oracle output.
///
/// Accepts `Output: 1.` / `Output: 0` anywhere in the text, or a bare leading
/// digit. Reasoning is whatever follows `Reasoning:`, else the whole text.
pub fn parse_coexistence_output(text: &str) -> Option<(bool, String)> {
    let lower = text.to_ascii_lowercase();
    let after = match lower.find("output:") {
        Some(i) => &text[i + "output:".len()..],
        None => text,
    };
    let after = after.trim_start_matches(|c: char| c.is_whitespace() || c == '*');
    let mut chars = after.chars();
    let verdict = match chars.next()? {
        '1' => true,
        '0' => false,
        _ => return None,
    };
    if chars.next().is_some_and(|c| c.is_ascii_digit()) {
        return None;
    }
    let reasoning = match lower.find("reasoning:") {
        Some(i) => text[i + "reasoning:".len()..].trim().to_string(),
        None => text.trim().to_string(),
    };
    Some((verdict, reasoning))
}

/// Oracle backed by a chat endpoint.
pub struct ModelCoexistenceOracle {
    endpoint: Arc<dyn ChatEndpoint>,
    /// Total tries when the reply cannot be parsed.
    pub parse_attempts: u32,
    /// Total tries on retriable transport failures, per request.
    pub transport_attempts: u32,
}

impl ModelCoexistenceOracle {
    pub fn new(endpoint: Arc<dyn ChatEndpoint>) -> Self {
        ModelCoexistenceOracle { endpoint, parse_attempts: 3, transport_attempts: 3 }
    }
}

impl CoexistenceOracle for ModelCoexistenceOracle {
    fn assess(&self, key: &str, rules: &[&AtomicRule]) -> Result<OracleVerdict, EndpointError> {
        let base = render_coexistence_prompt(rules);
        let mut last = String::new();
        for attempt in 1..=self.parse_attempts.max(1) {
            let req = base.clone().with_tag(key, attempt);
            let resp = complete_with_retry(self.endpoint.as_ref(), &req, self.transport_attempts)?;
            if let Some((feasible, reasoning)) = parse_coexistence_output(&resp.text) {
                return Ok(OracleVerdict { feasible, reasoning, flagged: false });
            }
            last = resp.text;
        }
        Ok(OracleVerdict { feasible: false, reasoning: last, flagged: true })
    }
}

/// Sets the coexistence verdict of a labeled combination.
pub fn validate_coexistence(
    combo: &RuleCombo,
    rules: &RuleIndex<'_>,
    oracle: &dyn CoexistenceOracle,
) -> Result<RuleCombo, CraftError> {
    let key = combo.key();
    if combo.level.is_none() {
        return Err(CraftError::Unlabeled(key));
    }
    let members = rules.members(combo)?;
    let verdict = oracle.assess(&key, &members).map_err(|source| CraftError::Oracle { combo: key, source })?;
    Ok(RuleCombo {
        coexistence: if verdict.feasible { Coexistence::Feasible } else { Coexistence::Infeasible },
        audit: Some(OracleAudit { reasoning: verdict.reasoning, flagged: verdict.flagged }),
        ..combo.clone()
    })
}

/// [`validate_coexistence`] over many combinations with at most `concurrency`
/// oracle calls in flight. Output order equals input order.
pub fn validate_all(
    combos: &[RuleCombo],
    rules: &RuleIndex<'_>,
    oracle: &dyn CoexistenceOracle,
    concurrency: usize,
) -> Result<Vec<RuleCombo>, CraftError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(concurrency.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| combos.par_iter().map(|c| validate_coexistence(c, rules, oracle)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule_crafter::{derive_labels, Level};
    use crate::rule_model::{ActionType, ContextTag, Jurisdiction, NormType, PerceptualType, PriorityClass, RuleId};
    use crate::llm::ChatResponse;
    use std::sync::Mutex;

    fn rule(id: &str, content: &str, tags: &[&str]) -> AtomicRule {
        AtomicRule {
            id: RuleId::new(id),
            content: content.into(),
            perceptual_type: PerceptualType::Static,
            norm_type: NormType::Obligatory,
            action_type: ActionType::MergeMainRoad,
            speed_range: None,
            priority_class: PriorityClass::TrafficSigns,
            jurisdiction: Jurisdiction::China,
            context_tags: tags.iter().map(|t| t.parse::<ContextTag>().unwrap()).collect(),
        }
    }

    #[test]
    fn fog_and_ice_coexist() {
        let a = rule("fog", "In foggy conditions, reduce speed.", &["weather:fog"]);
        let b = rule("ice", "When the road surface is icy, reduce speed.", &["surface:icy"]);
        assert!(TagCompatibilityOracle::default().assess("k", &[&a, &b]).unwrap().feasible);
    }

    #[test]
    fn permitted_and_prohibited_merge_do_not() {
        let a = rule("m1", "may merge", &["merge:permitted", "road:ramp"]);
        let b = rule("m2", "no merging sign", &["merge:prohibited", "sign:no_merging"]);
        let v = TagCompatibilityOracle::default().assess("k", &[&a, &b]).unwrap();
        assert!(!v.feasible);
        assert!(v.reasoning.contains("merge:prohibited"), "{}", v.reasoning);
    }

    #[test]
    fn copy_of_itself_is_feasible() {
        let a = rule("a", "x", &["road:highway", "weather:fog", "agent:truck"]);
        let mut b = a.clone();
        b.id = RuleId::new("b");
        assert!(TagCompatibilityOracle::default().assess("k", &[&a, &b]).unwrap().feasible);
    }

    #[test]
    fn multi_valued_namespaces() {
        let a = rule("a", "x", &["agent:truck"]);
        let b = rule("b", "y", &["agent:pedestrian"]);
        assert!(TagCompatibilityOracle::default().assess("k", &[&a, &b]).unwrap().feasible);
        let strict = TagCompatibilityOracle::with_multi_valued(Vec::<String>::new());
        assert!(!strict.assess("k", &[&a, &b]).unwrap().feasible);
    }

    #[test]
    fn parse_outputs() {
        assert_eq!(parse_coexistence_output("Output: 1.\nReasoning: fine").unwrap(), (true, "fine".into()));
        assert!(!parse_coexistence_output("0").unwrap().0);
        assert_eq!(parse_coexistence_output("**Output:** 0\nReasoning: no").unwrap(), (false, "no".into()));
        assert!(parse_coexistence_output("Output: 10").is_none());
        assert!(parse_coexistence_output("maybe").is_none());
        assert!(parse_coexistence_output("").is_none());
    }

    #[test]
    fn prompt_lists_rules() {
        let a = rule("a", "first", &[]);
        let b = rule("b", "second", &[]);
        let req = render_coexistence_prompt(&[&a, &b]);
        assert!(req.system.contains("I will input two such atomic regulations"));
        assert_eq!(req.user, "Input Rule 1: \"first\"\nInput Rule 2: \"second\"\n\nOutput:");
    }

    struct Scripted(Mutex<Vec<Result<&'static str, EndpointError>>>);
    impl ChatEndpoint for Scripted {
        fn complete(&self, _: &ChatRequest) -> Result<ChatResponse, EndpointError> {
            self.0.lock().unwrap().remove(0).map(ChatResponse::text)
        }
    }

    #[test]
    fn model_oracle_unparseable_becomes_flagged_infeasible() {
        let ep = Arc::new(Scripted(Mutex::new(vec![Ok("hmm"), Ok("unsure"), Ok("no idea")])));
        let oracle = ModelCoexistenceOracle::new(ep);
        let a = rule("a", "x", &[]);
        let v = oracle.assess("k", &[&a, &a]).unwrap();
        assert!(!v.feasible && v.flagged);
    }

    #[test]
    fn model_oracle_retries_transport_then_parses() {
        let ep = Arc::new(Scripted(Mutex::new(vec![
            Err(EndpointError::Transport("reset".into())),
            Ok("garbage"),
            Ok("Output: 1\nReasoning: ok"),
        ])));
        let oracle = ModelCoexistenceOracle::new(ep);
        let a = rule("a", "x", &[]);
        let v = oracle.assess("k", &[&a, &a]).unwrap();
        assert!(v.feasible && !v.flagged);
    }

    #[test]
    fn model_oracle_surfaces_transport_failure() {
        let ep = Arc::new(Scripted(Mutex::new(vec![Err(EndpointError::Transport("down".into())); 3])));
        let oracle = ModelCoexistenceOracle::new(ep);
        let a = rule("a", "x", &[]);
        assert!(oracle.assess("k", &[&a, &a]).is_err());
    }

    #[test]
    fn unlabeled_combo_rejected_and_order_kept() {
        let rules = vec![rule("a", "x", &["road:ramp"]), rule("b", "y", &["road:highway"]), rule("c", "z", &[])];
        let idx = RuleIndex::new(&rules);
        let raw = crate::rule_crafter::generate_candidate_combos(&rules, 2).unwrap();
        assert!(matches!(
            validate_coexistence(&raw[0], &idx, &TagCompatibilityOracle::default()),
            Err(CraftError::Unlabeled(_))
        ));
        let labeled: Vec<_> = raw.iter().map(|c| derive_labels(c, &idx).unwrap()).collect();
        let out = validate_all(&labeled, &idx, &TagCompatibilityOracle::default(), 4).unwrap();
        let keys: Vec<_> = out.iter().map(|c| (c.key(), c.coexistence)).collect();
        assert_eq!(
            keys,
            vec![
                ("a+b".to_string(), Coexistence::Infeasible),
                ("a+c".to_string(), Coexistence::Feasible),
                ("b+c".to_string(), Coexistence::Feasible),
            ]
        );
        assert!(out.iter().all(|c| c.level == Some(Level::L2)));
    }
}
