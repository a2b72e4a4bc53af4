use serde::{Deserialize, Serialize};

use super::{consistent_options, ActionDescriptor, Mcq, McqError, OptionKey, Options};
use crate::rule_crafter::Level;
use crate::rule_model::{Jurisdiction, RuleId};

/// The six-field object the generation prompts ask for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratedQuestion {
    #[serde(rename = "Scenario Description")]
    pub scenario_description: String,
    #[serde(rename = "Question Stem")]
    pub question_stem: String,
    #[serde(rename = "Options")]
    pub options: Options,
    #[serde(rename = "Question Design Logic")]
    pub design_logic: String,
    #[serde(rename = "Correct Answer Option")]
    pub correct_option: String,
    #[serde(rename = "Explanation of the Correct Answer")]
    pub explanation: String,
}

/// Identity of the question being assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub id: String,
    pub level: Level,
    pub jurisdiction: Jurisdiction,
    pub rule_ids: Vec<RuleId>,
}

/// Outermost `{…}` of a reply, tolerating code fences and chatter around it.
pub fn extract_json_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    (start < end).then(|| &text[start..=end])
}

/// Parses generator output and checks the claimed answer against `descriptor`.
///
/// Exactly one option must be consistent with the ground truth and it must
/// be the one the generator claims; otherwise the output is rejected.
pub fn assemble_mcq(output: &str, descriptor: &ActionDescriptor, provenance: &Provenance) -> Result<Mcq, McqError> {
    let json = extract_json_object(output).ok_or_else(|| McqError::Schema("no JSON object".into()))?;
    let g: GeneratedQuestion = serde_json::from_str(json).map_err(|e| McqError::Schema(e.to_string()))?;
    let fields = [
        ("Scenario Description", &g.scenario_description),
        ("Question Stem", &g.question_stem),
        ("Question Design Logic", &g.design_logic),
        ("Explanation of the Correct Answer", &g.explanation),
    ];
    if let Some((name, _)) = fields.iter().find(|(_, v)| v.trim().is_empty()) {
        return Err(McqError::Schema(format!("empty field {name:?}")));
    }
    if let Some((k, _)) = g.options.iter().find(|(_, v)| v.trim().is_empty()) {
        return Err(McqError::Schema(format!("empty option {k}")));
    }
    let claimed: OptionKey = g
        .correct_option
        .trim()
        .parse()
        .map_err(|s| McqError::Schema(format!("invalid correct option {s:?}")))?;

    let supported = consistent_options(descriptor, &g.options);
    if supported != [claimed] {
        return Err(McqError::CrossCheck { claimed, supported });
    }

    let mcq = Mcq {
        id: provenance.id.clone(),
        level: provenance.level,
        jurisdiction: provenance.jurisdiction,
        num_rules: provenance.rule_ids.len(),
        rule_ids: provenance.rule_ids.clone(),
        scene_text: Some(g.scenario_description.clone()),
        scenario_description: g.scenario_description,
        question_stem: g.question_stem,
        options: g.options,
        design_logic: g.design_logic,
        correct_option: claimed,
        explanation: g.explanation,
        frame_refs: None,
    };
    mcq.check_invariants()?;
    Ok(mcq)
}
