use std::collections::BTreeMap;

use itertools::Itertools;

use super::{CraftError, RuleCombo};
use crate::rule_model::{ActionType, AtomicRule};

pub const MIN_COMBO_SIZE: usize = 2;
pub const MAX_COMBO_SIZE: usize = 5;

/// All k-subsets of `rules` whose members share one action type.
///
/// Members are ordered by id; output is grouped by action type (declaration
/// order) and lexicographic within a group. Labels are left for
/// [`derive_labels`](super::derive_labels).
pub fn generate_candidate_combos(rules: &[AtomicRule], k: usize) -> Result<Vec<RuleCombo>, CraftError> {
    if !(MIN_COMBO_SIZE..=MAX_COMBO_SIZE).contains(&k) {
        return Err(CraftError::ComboSize(k));
    }
    if let Some(first) = rules.first() {
        if let Some(other) = rules.iter().find(|r| r.jurisdiction != first.jurisdiction) {
            return Err(CraftError::MixedJurisdictions(first.jurisdiction, other.jurisdiction));
        }
    }

    let mut groups: BTreeMap<ActionType, Vec<&AtomicRule>> = BTreeMap::new();
    for r in rules {
        groups.entry(r.action_type).or_default().push(r);
    }

    let mut out = Vec::new();
    for (action, mut group) in groups {
        group.sort_by(|a, b| a.id.cmp(&b.id));
        for subset in group.into_iter().combinations(k) {
            let members = subset.into_iter().map(|r| r.id.clone()).collect();
            out.push(RuleCombo::unchecked(members, action));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule_model::{Jurisdiction, NormType, PerceptualType, PriorityClass, RuleId};

    fn rule(id: &str, action: ActionType) -> AtomicRule {
        AtomicRule {
            id: RuleId::new(id),
            content: id.to_string(),
            perceptual_type: PerceptualType::Static,
            norm_type: NormType::Obligatory,
            action_type: action,
            speed_range: None,
            priority_class: PriorityClass::TrafficSigns,
            jurisdiction: Jurisdiction::Usa,
            context_tags: Default::default(),
        }
    }

    #[test]
    fn action_type_filter() {
        let rules = [
            rule("r1", ActionType::Overtake),
            rule("r2", ActionType::Overtake),
            rule("r3", ActionType::Yield),
        ];
        let combos = generate_candidate_combos(&rules, 2).unwrap();
        assert_eq!(combos.len(), 1);
        assert_eq!(combos[0].members, vec![RuleId::new("r1"), RuleId::new("r2")]);
        assert_eq!(combos[0].level, None);
    }

    /// Brute force: enumerate every bitmask of the input and keep the
    /// popcount-k masks whose rules share an action.
    fn brute_force_count(rules: &[AtomicRule], k: usize) -> usize {
        (0u32..(1 << rules.len()))
            .filter(|m| m.count_ones() as usize == k)
            .filter(|m| {
                let picked: Vec<_> = (0..rules.len()).filter(|i| m & (1 << i) != 0).collect();
                picked.iter().all(|&i| rules[i].action_type == rules[picked[0]].action_type)
            })
            .count()
    }

    #[test]
    fn six_same_action_rules_give_15_pairs() {
        let rules: Vec<_> = (0..6).map(|i| rule(&format!("r{i}"), ActionType::LaneChange)).collect();
        let expected = brute_force_count(&rules, 2);
        assert_eq!(expected, 15);
        assert_eq!(generate_candidate_combos(&rules, 2).unwrap().len(), expected);
    }

    #[test]
    fn matches_brute_force_for_all_k() {
        let actions = [ActionType::Overtake, ActionType::Yield, ActionType::LaneChange];
        let rules: Vec<_> = (0..11).map(|i| rule(&format!("r{i:02}"), actions[i * 7 % 3])).collect();
        for k in 2..=5 {
            assert_eq!(generate_candidate_combos(&rules, k).unwrap().len(), brute_force_count(&rules, k), "k={k}");
        }
    }

    #[test]
    fn distinct_actions_give_nothing() {
        let rules = [rule("a", ActionType::Overtake), rule("b", ActionType::Yield), rule("c", ActionType::Reverse)];
        assert!(generate_candidate_combos(&rules, 2).unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_k_and_mixed_jurisdictions() {
        let mut rules = vec![rule("a", ActionType::Overtake), rule("b", ActionType::Overtake)];
        assert!(matches!(generate_candidate_combos(&rules, 1), Err(CraftError::ComboSize(1))));
        assert!(matches!(generate_candidate_combos(&rules, 6), Err(CraftError::ComboSize(6))));
        rules[1].jurisdiction = Jurisdiction::Japan;
        assert!(matches!(generate_candidate_combos(&rules, 2), Err(CraftError::MixedJurisdictions(..))));
    }
}
