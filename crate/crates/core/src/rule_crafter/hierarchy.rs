use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    derive_labels, generate_candidate_combos, validate_all, CoexistenceOracle, Coexistence, CraftError, Level, RuleCombo,
    RuleIndex,
};
use crate::rule_model::{AtomicRule, Jurisdiction};

/// The final rule set: every atomic rule (level 1) plus the feasible
/// multi-rule combinations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalRuleSet {
    pub jurisdiction: Jurisdiction,
    pub atomic: Vec<AtomicRule>,
    /// Multi-rule combinations only, sorted by level then key.
    pub combos: Vec<RuleCombo>,
    /// `"L1"`..`"L5"` → entry keys. Derived; rebuilt and checked on load.
    pub level_index: BTreeMap<String, Vec<String>>,
}

fn index_of(atomic: &[AtomicRule], combos: &[RuleCombo]) -> BTreeMap<String, Vec<String>> {
    let mut index: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for r in atomic {
        index.entry(Level::L1.to_string()).or_default().push(r.id.to_string());
    }
    for c in combos {
        let level = c.level.expect("combos in a hierarchy are labeled");
        index.entry(level.to_string()).or_default().push(c.key());
    }
    index
}

/// Assembles the hierarchy from atomic rules and checked combinations.
///
/// Infeasible and unchecked combinations are dropped, singletons are
/// subsumed by the atomic rules, and combinations with the same member set
/// are collapsed to the first occurrence.
pub fn build_hierarchy(
    jurisdiction: Jurisdiction,
    rules: &[AtomicRule],
    combos: &[RuleCombo],
) -> Result<HierarchicalRuleSet, CraftError> {
    if let Some(other) = rules.iter().find(|r| r.jurisdiction != jurisdiction) {
        return Err(CraftError::MixedJurisdictions(jurisdiction, other.jurisdiction));
    }
    let index = RuleIndex::new(rules);
    let mut seen = BTreeSet::new();
    let mut kept = Vec::new();
    for combo in combos {
        index.members(combo)?;
        if combo.is_singleton() || combo.coexistence != Coexistence::Feasible {
            continue;
        }
        if combo.level.is_none() {
            return Err(CraftError::Unlabeled(combo.key()));
        }
        if seen.insert(combo.key()) {
            kept.push(combo.clone());
        }
    }
    kept.sort_by_key(|c| (c.level, c.key()));
    let level_index = index_of(rules, &kept);
    Ok(HierarchicalRuleSet { jurisdiction, atomic: rules.to_vec(), combos: kept, level_index })
}

/// Tallies of one crafting run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CraftSummary {
    pub candidates: usize,
    pub feasible: usize,
    pub infeasible: usize,
    /// Oracle verdicts marked for human attention.
    pub flagged: usize,
}

/// Candidate generation, labeling, coexistence checking and assembly for
/// every combination size in `sizes`.
pub fn craft_hierarchy(
    jurisdiction: Jurisdiction,
    rules: &[AtomicRule],
    sizes: &[usize],
    oracle: &dyn CoexistenceOracle,
    concurrency: usize,
) -> Result<(HierarchicalRuleSet, CraftSummary), CraftError> {
    let index = RuleIndex::new(rules);
    let mut labeled = Vec::new();
    for &k in sizes {
        for c in generate_candidate_combos(rules, k)? {
            labeled.push(derive_labels(&c, &index)?);
        }
    }
    let checked = validate_all(&labeled, &index, oracle, concurrency)?;
    let mut summary = CraftSummary { candidates: checked.len(), ..Default::default() };
    for c in &checked {
        match c.coexistence {
            Coexistence::Feasible => summary.feasible += 1,
            _ => summary.infeasible += 1,
        }
        if c.audit.as_ref().is_some_and(|a| a.flagged) {
            summary.flagged += 1;
        }
    }
    Ok((build_hierarchy(jurisdiction, rules, &checked)?, summary))
}

impl HierarchicalRuleSet {
    /// Every entry as a combination, level-1 singletons first.
    pub fn entries(&self) -> Vec<RuleCombo> {
        self.atomic.iter().map(RuleCombo::singleton).chain(self.combos.iter().cloned()).collect()
    }

    pub fn count_by_level(&self) -> BTreeMap<Level, usize> {
        let mut counts: BTreeMap<Level, usize> = Level::ALL.into_iter().map(|l| (l, 0)).collect();
        *counts.get_mut(&Level::L1).unwrap() += self.atomic.len();
        for c in &self.combos {
            if let Some(l) = c.level {
                *counts.entry(l).or_default() += 1;
            }
        }
        counts
    }

    pub fn rule_index(&self) -> RuleIndex<'_> {
        RuleIndex::new(&self.atomic)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("hierarchy serializes");
        s.push('\n');
        s
    }

    /// Parses an export and checks its structural invariants.
    pub fn from_json(text: &str) -> Result<Self, CraftError> {
        let set: HierarchicalRuleSet =
            serde_json::from_str(text).map_err(|e| CraftError::InvalidExport(e.to_string()))?;
        let index = set.rule_index();
        let mut seen = BTreeSet::new();
        for c in &set.combos {
            index.members(c)?;
            if c.coexistence != Coexistence::Feasible || c.level.is_none() || c.is_singleton() {
                return Err(CraftError::InvalidExport(format!("combo {} is not a feasible labeled combination", c.key())));
            }
            if !seen.insert(c.key()) {
                return Err(CraftError::InvalidExport(format!("duplicate combo {}", c.key())));
            }
        }
        if index_of(&set.atomic, &set.combos) != set.level_index {
            return Err(CraftError::InvalidExport("level index does not match entries".into()));
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule_crafter::{derive_labels, generate_candidate_combos, OracleAudit};
    use crate::rule_model::{ActionType, NormType, PerceptualType, PriorityClass, RuleId};

    fn rule(id: &str, b: PerceptualType, n: NormType) -> AtomicRule {
        AtomicRule {
            id: RuleId::new(id),
            content: id.into(),
            perceptual_type: b,
            norm_type: n,
            action_type: ActionType::LaneChange,
            speed_range: None,
            priority_class: PriorityClass::RoadMarkings,
            jurisdiction: Jurisdiction::Uk,
            context_tags: Default::default(),
        }
    }

    #[test]
    fn atomic_only() {
        let rules: Vec<_> = ["a", "b", "c"].iter().map(|i| rule(i, PerceptualType::Static, NormType::Obligatory)).collect();
        let m = build_hierarchy(Jurisdiction::Uk, &rules, &[]).unwrap();
        assert_eq!(m.level_index["L1"].len(), 3);
        assert_eq!(m.entries().len(), 3);
        assert!(m.combos.is_empty());
    }

    #[test]
    fn keeps_only_feasible_and_dedupes() {
        let rules = vec![
            rule("a", PerceptualType::Static, NormType::Obligatory),
            rule("b", PerceptualType::Dynamic, NormType::Forbidden),
            rule("c", PerceptualType::Static, NormType::Obligatory),
        ];
        let idx = RuleIndex::new(&rules);
        let mut combos: Vec<_> = generate_candidate_combos(&rules, 2)
            .unwrap()
            .iter()
            .map(|c| derive_labels(c, &idx).unwrap())
            .collect();
        combos[0].coexistence = Coexistence::Feasible;
        combos[1].coexistence = Coexistence::Infeasible;
        combos[2].coexistence = Coexistence::Feasible;
        let mut dup = combos[0].clone();
        dup.members.reverse();
        dup.audit = Some(OracleAudit { reasoning: "dup".into(), flagged: false });
        combos.push(dup);
        let m = build_hierarchy(Jurisdiction::Uk, &rules, &combos).unwrap();
        let keys: Vec<_> = m.combos.iter().map(RuleCombo::key).collect();
        assert_eq!(keys, vec!["a+b", "b+c"]);
        assert_eq!(m.count_by_level()[&Level::L5], 2);

        let back = HierarchicalRuleSet::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn unknown_member_is_error() {
        let rules = vec![rule("a", PerceptualType::Static, NormType::Obligatory)];
        let mut c = RuleCombo::unchecked(vec![RuleId::new("a"), RuleId::new("zz")], ActionType::LaneChange);
        c.level = Some(Level::L2);
        c.coexistence = Coexistence::Feasible;
        assert!(matches!(build_hierarchy(Jurisdiction::Uk, &rules, &[c]), Err(CraftError::UnknownRule(_))));
    }

    #[test]
    fn tampered_index_rejected() {
        let rules = vec![rule("a", PerceptualType::Static, NormType::Obligatory)];
        let mut m = build_hierarchy(Jurisdiction::Uk, &rules, &[]).unwrap();
        m.level_index.insert("L2".into(), vec!["x".into()]);
        assert!(HierarchicalRuleSet::from_json(&m.to_json()).is_err());
    }
}
