use serde::{Deserialize, Serialize};

use super::McqError;
use crate::rule_crafter::{Coexistence, Level, RuleCombo, RuleIndex};
use crate::rule_model::{ActionType, AtomicRule, NormType, RuleId, SpeedRange};

/// What the driver must do with respect to the combination's action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Directive {
    Perform,
    Refrain,
    MayPerform,
    KeepSpeedWithin { lower: f64, upper: f64 },
}

impl Directive {
    fn of(rule: &AtomicRule) -> Directive {
        if let Some(r) = rule.speed_range {
            return Directive::KeepSpeedWithin { lower: r.lower, upper: r.upper };
        }
        match rule.norm_type {
            NormType::Obligatory => Directive::Perform,
            NormType::Forbidden => Directive::Refrain,
            NormType::Permissive => Directive::MayPerform,
        }
    }
}

/// Ground-truth answer for a combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDescriptor {
    pub action_type: ActionType,
    pub directive: Directive,
    /// Rules whose constraints the answer satisfies.
    pub governing_rules: Vec<RuleId>,
}

/// Correct action for a hierarchy entry.
///
/// Level 1 follows the rule itself; levels 2–4 satisfy every member at once;
/// level 5 follows the unique member of highest priority class.
pub fn determine_correct_action(combo: &RuleCombo, rules: &RuleIndex<'_>) -> Result<ActionDescriptor, McqError> {
    if !combo.is_singleton() && combo.coexistence != Coexistence::Feasible {
        return Err(McqError::NotFeasible(combo.key()));
    }
    let members = rules.members(combo)?;
    let level = combo.level.ok_or_else(|| crate::rule_crafter::CraftError::Unlabeled(combo.key()))?;

    if level == Level::L5 {
        let top = members.iter().map(|r| r.priority_class.rank()).min().expect("nonempty combo");
        let winners: Vec<&AtomicRule> = members.iter().copied().filter(|r| r.priority_class.rank() == top).collect();
        if winners.len() > 1 {
            return Err(McqError::SamePriorityTie {
                class: winners[0].priority_class,
                rules: winners.iter().map(|r| r.id.clone()).collect(),
            });
        }
        let w = winners[0];
        return Ok(ActionDescriptor {
            action_type: w.action_type,
            directive: Directive::of(w),
            governing_rules: vec![w.id.clone()],
        });
    }

    let action_type = combo.action_type;
    let directive = if action_type.is_speed() {
        let ranges: Vec<SpeedRange> = members.iter().filter_map(|r| r.speed_range).collect();
        let r = SpeedRange::intersect_all(&ranges).ok_or_else(|| McqError::NotFeasible(combo.key()))?;
        Directive::KeepSpeedWithin { lower: r.lower, upper: r.upper }
    } else if members.iter().any(|r| r.norm_type == NormType::Forbidden) {
        Directive::Refrain
    } else if members.iter().any(|r| r.norm_type == NormType::Obligatory) {
        Directive::Perform
    } else {
        Directive::MayPerform
    };
    Ok(ActionDescriptor { action_type, directive, governing_rules: members.iter().map(|r| r.id.clone()).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule_crafter::derive_labels;
    use crate::rule_model::{Jurisdiction, PerceptualType, PriorityClass};

    fn rule(id: &str, n: NormType, p: PriorityClass) -> AtomicRule {
        AtomicRule {
            id: RuleId::new(id),
            content: id.into(),
            perceptual_type: PerceptualType::Static,
            norm_type: n,
            action_type: ActionType::Overtake,
            speed_range: None,
            priority_class: p,
            jurisdiction: Jurisdiction::Usa,
            context_tags: Default::default(),
        }
    }

    fn feasible(rules: &[AtomicRule]) -> RuleCombo {
        let idx = RuleIndex::new(rules);
        let c = RuleCombo::unchecked(rules.iter().map(|r| r.id.clone()).collect(), rules[0].action_type);
        let mut c = derive_labels(&c, &idx).unwrap();
        c.coexistence = Coexistence::Feasible;
        c
    }

    #[test]
    fn lights_beat_signs() {
        let rules = [
            rule("sign", NormType::Forbidden, PriorityClass::TrafficSigns),
            rule("light", NormType::Obligatory, PriorityClass::TrafficLights),
        ];
        let d = determine_correct_action(&feasible(&rules), &RuleIndex::new(&rules)).unwrap();
        assert_eq!(d.directive, Directive::Perform);
        assert_eq!(d.governing_rules, vec![RuleId::new("light")]);
    }

    #[test]
    fn tie_is_surfaced() {
        let rules = [
            rule("a", NormType::Forbidden, PriorityClass::RoadMarkings),
            rule("b", NormType::Obligatory, PriorityClass::RoadMarkings),
        ];
        let err = determine_correct_action(&feasible(&rules), &RuleIndex::new(&rules)).unwrap_err();
        assert!(matches!(err, McqError::SamePriorityTie { class: PriorityClass::RoadMarkings, .. }));
    }

    #[test]
    fn harmony_conjunction() {
        let rules = [
            rule("a", NormType::Permissive, PriorityClass::RoadMarkings),
            rule("b", NormType::Obligatory, PriorityClass::TrafficSigns),
        ];
        let d = determine_correct_action(&feasible(&rules), &RuleIndex::new(&rules)).unwrap();
        assert_eq!(d.directive, Directive::Perform);
        assert_eq!(d.governing_rules.len(), 2);
    }

    #[test]
    fn speed_conflict_follows_winner_interval() {
        let mut a = rule("a", NormType::Obligatory, PriorityClass::DefensiveDriving);
        let mut b = rule("b", NormType::Obligatory, PriorityClass::TrafficSigns);
        for (r, lo, hi) in [(&mut a, 0.0, 30.0), (&mut b, 60.0, 100.0)] {
            r.action_type = ActionType::SpeedLimit;
            r.speed_range = Some(SpeedRange::new(lo, hi));
        }
        let rules = [a, b];
        let c = feasible(&rules);
        assert_eq!(c.level, Some(Level::L5));
        let d = determine_correct_action(&c, &RuleIndex::new(&rules)).unwrap();
        assert_eq!(d.directive, Directive::KeepSpeedWithin { lower: 60.0, upper: 100.0 });
    }

    #[test]
    fn speed_harmony_uses_intersection() {
        let mut a = rule("a", NormType::Obligatory, PriorityClass::DefensiveDriving);
        let mut b = rule("b", NormType::Obligatory, PriorityClass::TrafficSigns);
        for (r, lo, hi) in [(&mut a, 0.0, 70.0), (&mut b, 0.0, 30.0)] {
            r.action_type = ActionType::SpeedLimit;
            r.speed_range = Some(SpeedRange::new(lo, hi));
        }
        let rules = [a, b];
        let d = determine_correct_action(&feasible(&rules), &RuleIndex::new(&rules)).unwrap();
        assert_eq!(d.directive, Directive::KeepSpeedWithin { lower: 0.0, upper: 30.0 });
    }

    #[test]
    fn infeasible_rejected() {
        let rules = [rule("a", NormType::Obligatory, PriorityClass::TrafficSigns), rule("b", NormType::Obligatory, PriorityClass::TrafficSigns)];
        let mut c = feasible(&rules);
        c.coexistence = Coexistence::Infeasible;
        assert!(matches!(determine_correct_action(&c, &RuleIndex::new(&rules)), Err(McqError::NotFeasible(_))));
    }
}
