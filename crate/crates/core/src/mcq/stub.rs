//! Deterministic offline stand-ins for the generator, judges and scorers.
//!
//! All choices are derived from an FNV-1a hash of the request, so runs are
//! reproducible across platforms and thread schedules.

use std::collections::{BTreeMap, HashMap};

use super::{determine_correct_action, question_id, ActionDescriptor, Directive, OptionKey};
use crate::llm::{ChatEndpoint, ChatRequest, ChatResponse, EndpointError};
use crate::rule_crafter::HierarchicalRuleSet;
use crate::rule_model::ActionType;
use crate::util::{fmt_num, fnv1a};

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

/// Text of the option the stub generator marks as correct for `d`.
pub fn correct_phrase(d: &ActionDescriptor) -> String {
    match d.directive {
        Directive::Perform | Directive::MayPerform => format!("{} as the situation requires.", capitalize(d.action_type.phrase())),
        Directive::Refrain => format!("Do not {}; keep the current course.", d.action_type.phrase()),
        Directive::KeepSpeedWithin { lower, upper } => {
            format!("Keep the speed at about {} km/h.", fmt_num(((lower + upper) / 2.0).round()))
        }
    }
}

fn unrelated_actions(a: ActionType) -> impl Iterator<Item = ActionType> {
    let start = ActionType::ALL.iter().position(|x| *x == a).unwrap_or(0);
    (1..ActionType::ALL.len())
        .map(move |i| ActionType::ALL[(start + i) % ActionType::ALL.len()])
        .filter(move |b| !b.is_speed() && *b != a)
        .filter(move |b| {
            let probe = ActionDescriptor { action_type: a, directive: Directive::Perform, governing_rules: vec![] };
            let text = format!("{}.", capitalize(b.phrase()));
            !super::option_consistent(&probe, &text)
                && !super::option_consistent(&ActionDescriptor { directive: Directive::Refrain, ..probe.clone() }, &text)
        })
}

fn distractors(d: &ActionDescriptor) -> [String; 3] {
    let phrase = d.action_type.phrase();
    let mut other = unrelated_actions(d.action_type).map(|b| format!("{}.", capitalize(b.phrase())));
    match d.directive {
        Directive::Perform | Directive::MayPerform => [
            format!("Do not {phrase} and wait for the situation to change."),
            other.next().expect("action space has alternatives"),
            other.next().expect("action space has alternatives"),
        ],
        Directive::Refrain => [
            format!("{} immediately.", capitalize(phrase)),
            format!("{} after a brief check of the mirrors.", capitalize(phrase)),
            other.next().expect("action space has alternatives"),
        ],
        Directive::KeepSpeedWithin { upper, .. } => [20.0, 40.0, 60.0]
            .map(|dv| format!("Drive at about {} km/h.", fmt_num(upper + dv))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StubFault {
    /// Drops the explanation field.
    MissingField,
    /// Claims the option after the correct one.
    WrongClaim,
    /// Replies with prose instead of JSON.
    NotJson,
}

/// Generator answering tagged generation requests for the entries of one hierarchy.
pub struct StubGenerator {
    descriptors: HashMap<String, ActionDescriptor>,
    faults: BTreeMap<(String, u32), StubFault>,
}

impl StubGenerator {
    pub fn new(set: &HierarchicalRuleSet) -> Self {
        let idx = set.rule_index();
        let descriptors = set
            .entries()
            .iter()
            .filter_map(|c| determine_correct_action(c, &idx).ok().map(|d| (question_id(set, c), d)))
            .collect();
        StubGenerator { descriptors, faults: BTreeMap::new() }
    }

    pub fn with_fault(mut self, id: impl Into<String>, attempt: u32, fault: StubFault) -> Self {
        self.faults.insert((id.into(), attempt), fault);
        self
    }

    /// Letter the correct option lands on for a given attempt.
    pub fn correct_key(id: &str, attempt: u32) -> OptionKey {
        OptionKey::ALL[((fnv1a(id.as_bytes()) + u64::from(attempt)) % 4) as usize]
    }

    fn render(&self, id: &str, attempt: u32, d: &ActionDescriptor) -> String {
        let correct = Self::correct_key(id, attempt);
        let mut wrong = distractors(d).into_iter();
        let texts: Vec<String> = OptionKey::ALL
            .iter()
            .map(|k| if *k == correct { correct_phrase(d) } else { wrong.next().unwrap() })
            .collect();
        let fault = self.faults.get(&(id.to_string(), attempt)).copied();
        let claimed = if fault == Some(StubFault::WrongClaim) { OptionKey::ALL[(correct.index() + 1) % 4] } else { correct };
        let governing: Vec<&str> = d.governing_rules.iter().map(|r| r.as_str()).collect();
        let mut value = serde_json::json!({
            "Scenario Description": format!("Synthetic scene for {id}."),
            "Question Stem": "As the driver, how should you respond correctly in this situation?",
            "Options": { "A": texts[0], "B": texts[1], "C": texts[2], "D": texts[3] },
            "Question Design Logic": "Distractors reverse the directive or substitute an unrelated action.",
            "Correct Answer Option": claimed.as_str(),
            "Explanation of the Correct Answer": format!("Option {correct} follows {}.", governing.join(", ")),
        });
        match fault {
            Some(StubFault::MissingField) => {
                value.as_object_mut().unwrap().remove("Explanation of the Correct Answer");
            }
            Some(StubFault::NotJson) => return "I cannot produce a question for this rule.".into(),
            _ => {}
        }
        serde_json::to_string_pretty(&value).unwrap()
    }
}

impl ChatEndpoint for StubGenerator {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, EndpointError> {
        let tag = request.tag.as_ref().ok_or_else(|| EndpointError::Unsupported("stub generator needs tagged requests".into()))?;
        let d = self
            .descriptors
            .get(&tag.item_id)
            .ok_or_else(|| EndpointError::ReplayMiss(tag.item_id.clone()))?;
        Ok(ChatResponse::text(self.render(&tag.item_id, tag.repeat, d)))
    }
}

/// Judge that rejects a question when `hash(judge, question) % modulus == 0`;
/// `modulus == 0` approves everything.
pub struct StubJudge {
    pub index: u32,
    pub modulus: u64,
}

impl StubJudge {
    pub fn decision(index: u32, modulus: u64, user: &str) -> u8 {
        if modulus == 0 {
            return 1;
        }
        u8::from(!fnv1a(format!("judge{index}:{user}").as_bytes()).is_multiple_of(modulus))
    }
}

impl ChatEndpoint for StubJudge {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, EndpointError> {
        let d = Self::decision(self.index, self.modulus, &request.user);
        Ok(ChatResponse::text(format!("Output Decision: {d}\n\nOutput Reasoning: stub judge {}.", self.index)))
    }
}

/// Scorer emitting one of 0.3, 0.4, …, 1.0 from a hash of the request.
pub struct StubScorer {
    pub index: u32,
}

impl StubScorer {
    pub fn score(index: u32, user: &str) -> f64 {
        (3 + fnv1a(format!("scorer{index}:{user}").as_bytes()) % 8) as f64 / 10.0
    }
}

impl ChatEndpoint for StubScorer {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, EndpointError> {
        Ok(ChatResponse::text(format!("{:.1}", Self::score(self.index, &request.user))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcq::consistent_options;
    use crate::mcq::Options;

    #[test]
    fn every_descriptor_has_exactly_one_consistent_option() {
        for a in ActionType::ALL {
            let directives: Vec<Directive> = if a.is_speed() {
                vec![Directive::KeepSpeedWithin { lower: 0.0, upper: 30.0 }, Directive::KeepSpeedWithin { lower: 110.0, upper: 200.0 }]
            } else {
                vec![Directive::Perform, Directive::Refrain, Directive::MayPerform]
            };
            for directive in directives {
                let d = ActionDescriptor { action_type: *a, directive, governing_rules: vec![] };
                let [x, y, z] = distractors(&d);
                let opts = Options::from_array([correct_phrase(&d), x, y, z]);
                assert_eq!(consistent_options(&d, &opts), vec![OptionKey::A], "{a:?} {directive:?} {opts:?}");
            }
        }
    }
}
