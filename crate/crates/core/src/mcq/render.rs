use super::McqError;
use crate::llm::ChatRequest;
use crate::prompts;
use crate::rule_crafter::{CraftError, Level, RuleCombo, RuleIndex};

/// Generation request for `combo` at `level`: the level's template as the
/// system message, the filled rule slots as the user message.
///
/// Only the slots for the combination's rules are emitted; the templates'
/// optional slots are not padded.
pub fn render_generation_prompt(combo: &RuleCombo, rules: &RuleIndex<'_>, level: Level) -> Result<ChatRequest, McqError> {
    let actual = combo.level.ok_or_else(|| CraftError::Unlabeled(combo.key()))?;
    if actual != level {
        return Err(McqError::LevelMismatch { requested: level, actual });
    }
    let members = rules.members(combo)?;
    let template = match level.get() {
        1 => prompts::MCQ_LEVEL1,
        5 => prompts::MCQ_LEVEL5,
        _ => prompts::MCQ_MULTI,
    };
    let slots = prompts::rule_slots(members.iter().map(|r| r.content.as_str()));
    Ok(ChatRequest::new(prompts::with_count(template, members.len()), format!("{slots}\n\nOutput JSON:")))
}

/// Flat text of a request, as shown to quality scorers.
pub fn prompt_text(request: &ChatRequest) -> String {
    format!("{}\n\n{}", request.system.trim_end(), request.user)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule_crafter::{derive_labels, Coexistence};
    use crate::rule_model::*;

    fn rule(id: &str, n: NormType, p: PriorityClass) -> AtomicRule {
        AtomicRule {
            id: RuleId::new(id),
            content: format!("content of {id}"),
            perceptual_type: PerceptualType::Static,
            norm_type: n,
            action_type: ActionType::Overtake,
            speed_range: None,
            priority_class: p,
            jurisdiction: Jurisdiction::Usa,
            context_tags: Default::default(),
        }
    }

    fn labeled(rules: &[AtomicRule]) -> RuleCombo {
        let idx = RuleIndex::new(rules);
        let mut c = derive_labels(&RuleCombo::unchecked(rules.iter().map(|r| r.id.clone()).collect(), ActionType::Overtake), &idx).unwrap();
        c.coexistence = Coexistence::Feasible;
        c
    }

    #[test]
    fn level1_single_slot() {
        let rules = [rule("a", NormType::Forbidden, PriorityClass::TrafficSigns)];
        let combo = RuleCombo::singleton(&rules[0]);
        let req = render_generation_prompt(&combo, &RuleIndex::new(&rules), Level::L1).unwrap();
        assert_eq!(req.system, prompts::MCQ_LEVEL1);
        assert_eq!(req.user, "Input Rule: content of a\n\nOutput JSON:");
    }

    #[test]
    fn level5_two_slots_and_priority_list() {
        let rules = [
            rule("a", NormType::Forbidden, PriorityClass::TrafficSigns),
            rule("b", NormType::Obligatory, PriorityClass::TrafficLights),
        ];
        let req = render_generation_prompt(&labeled(&rules), &RuleIndex::new(&rules), Level::L5).unwrap();
        assert!(req.system.contains("Pedestrian life safety > Emergency avoidance vehicles > On-site command personnel > Traffic lights > Traffic signs > Road markings > Interactive right-of-way > Defensive driving > Emergency exceptions."));
        assert!(req.system.contains("from the two given inputs"));
        assert_eq!(req.user, "Input Rule 1: content of a\n\nInput Rule 2: content of b\n\nOutput JSON:");
    }

    #[test]
    fn level2_five_slots() {
        let rules: Vec<_> = (0..5).map(|i| rule(&format!("r{i}"), NormType::Obligatory, PriorityClass::TrafficSigns)).collect();
        let combo = labeled(&rules);
        let req = render_generation_prompt(&combo, &RuleIndex::new(&rules), Level::L2).unwrap();
        assert_eq!(req.user.matches("Input Rule ").count(), 5);
        assert!(req.user.contains("Input Rule 5: content of r4"));
        assert!(req.system.starts_with(prompts::with_count(prompts::MCQ_MULTI, 5).as_str()));
        assert!(matches!(
            render_generation_prompt(&combo, &RuleIndex::new(&rules), Level::L3),
            Err(McqError::LevelMismatch { .. })
        ));
    }
}
