//! Lexical reading of answer options against a ground-truth action.
//!
//! An option *mentions* an action when one of the action's keywords occurs
//! on word boundaries and is not part of a longer keyword of another action
//! ("left turn" inside "left turn signal"). A mention is *negated* when a
//! negation cue precedes it in the same clause. Speed options are read
//! through their `N km/h` figures.

use super::{ActionDescriptor, Directive, OptionKey, Options};
use crate::rule_model::ActionType;

const NEGATIONS: &[&str] = &["not", "never", "avoid", "avoiding", "refrain", "without", "don't", "no", "cannot", "nor"];
const CLAUSE_BREAKS: &[&str] = &[",", ";", ".", ":", " and ", " but ", " then ", " while ", " before ", " after ", " or "];

fn boundary(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
}

fn keyword_hits(text: &str) -> Vec<(usize, usize, ActionType)> {
    let mut hits = Vec::new();
    for &action in ActionType::ALL.iter().filter(|a| !a.is_speed()) {
        for kw in action.keywords() {
            for (start, _) in text.match_indices(kw) {
                let end = start + kw.len();
                if boundary(text, start, end) {
                    hits.push((start, end, action));
                }
            }
        }
    }
    let maximal: Vec<_> = hits
        .iter()
        .copied()
        .filter(|&(s, e, a)| !hits.iter().any(|&(s2, e2, a2)| a2 != a && s2 <= s && e <= e2 && (e2 - s2) > (e - s)))
        .collect();
    maximal
}

fn clause_start(text: &str, pos: usize) -> usize {
    CLAUSE_BREAKS
        .iter()
        .filter_map(|b| text[..pos].rfind(b).map(|i| i + b.len()))
        .max()
        .unwrap_or(0)
}

fn negated_at(text: &str, pos: usize) -> bool {
    let clause = &text[clause_start(text, pos)..pos];
    clause
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .any(|w| NEGATIONS.contains(&w))
}

/// `Some(negated)` for the first mention of `action`, `None` if absent.
fn mention(text: &str, action: ActionType) -> Option<bool> {
    let first = keyword_hits(text).into_iter().filter(|h| h.2 == action).map(|h| h.0).min()?;
    Some(negated_at(text, first))
}

fn speeds(text: &str) -> Vec<f64> {
    let mut out = Vec::new();
    for (idx, _) in text.match_indices("km/h") {
        let head = text[..idx].trim_end();
        let digits: String = head
            .chars()
            .rev()
            .take_while(|c| c.is_ascii_digit() || *c == '.')
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        if let Ok(v) = digits.parse::<f64>() {
            out.push(v);
        }
    }
    out
}

/// Whether `option` states an action that satisfies `descriptor`.
pub fn option_consistent(descriptor: &ActionDescriptor, option: &str) -> bool {
    let text = option.to_lowercase();
    match descriptor.directive {
        Directive::KeepSpeedWithin { lower, upper } => {
            let vs = speeds(&text);
            !vs.is_empty() && vs.iter().all(|v| lower <= *v && *v <= upper)
        }
        Directive::Perform | Directive::MayPerform => mention(&text, descriptor.action_type) == Some(false),
        Directive::Refrain => mention(&text, descriptor.action_type) == Some(true),
    }
}

pub fn consistent_options(descriptor: &ActionDescriptor, options: &Options) -> Vec<OptionKey> {
    options.iter().filter(|(_, t)| option_consistent(descriptor, t)).map(|(k, _)| k).collect()
}
