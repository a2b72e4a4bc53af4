use serde::{Deserialize, Serialize};

use super::{CraftError, Level, NormRelation, PerceptualCombo, RuleCombo, RuleIndex};
use crate::rule_model::{ActionType, AtomicRule, NormType, PerceptualType, SpeedRange};

/// Derived labels of a multi-rule combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComboLabels {
    pub perceptual_combo: PerceptualCombo,
    pub norm_relation: NormRelation,
    pub level: Level,
}

fn clash(a: NormType, b: NormType) -> bool {
    matches!(
        (a, b),
        (NormType::Obligatory, NormType::Forbidden) | (NormType::Forbidden, NormType::Obligatory)
    )
}

/// Labels for two or more rules sharing an action type.
///
/// Speed rules conflict exactly when their ranges have no common point; the
/// norm types are not consulted for them. Other rules conflict when any two
/// members are obligatory/forbidden.
pub fn classify(members: &[&AtomicRule]) -> Result<ComboLabels, CraftError> {
    if members.len() < 2 {
        return Err(CraftError::SingletonCombo(members.len()));
    }
    let action = members[0].action_type;
    if members.iter().any(|r| r.action_type != action) {
        let ids: Vec<&str> = members.iter().map(|r| r.id.as_str()).collect();
        return Err(CraftError::MixedActionTypes(ids.join("+")));
    }

    let perceptual_combo = if members.iter().all(|r| r.perceptual_type == PerceptualType::Static) {
        PerceptualCombo::DoubleStatic
    } else if members.iter().all(|r| r.perceptual_type == PerceptualType::Dynamic) {
        PerceptualCombo::DoubleDynamic
    } else {
        PerceptualCombo::Hybrid
    };

    let conflict = if action == ActionType::SpeedLimit {
        let ranges = members
            .iter()
            .map(|r| r.speed_range.ok_or_else(|| CraftError::MissingSpeedRange(r.id.clone())))
            .collect::<Result<Vec<SpeedRange>, _>>()?;
        SpeedRange::intersect_all(&ranges).is_none()
    } else {
        members
            .iter()
            .enumerate()
            .any(|(i, a)| members[i + 1..].iter().any(|b| clash(a.norm_type, b.norm_type)))
    };

    let (norm_relation, level) = if conflict {
        (NormRelation::NormConflict, Level::L5)
    } else {
        let level = match perceptual_combo {
            PerceptualCombo::DoubleStatic => Level::L2,
            PerceptualCombo::DoubleDynamic => Level::L3,
            PerceptualCombo::Hybrid => Level::L4,
        };
        (NormRelation::NormHarmony, level)
    };
    Ok(ComboLabels { perceptual_combo, norm_relation, level })
}

/// Returns `combo` with perceptual combination, normative relation and level filled in.
pub fn derive_labels(combo: &RuleCombo, rules: &RuleIndex<'_>) -> Result<RuleCombo, CraftError> {
    let members = rules.members(combo)?;
    let labels = classify(&members)?;
    Ok(RuleCombo {
        perceptual_combo: Some(labels.perceptual_combo),
        norm_relation: Some(labels.norm_relation),
        level: Some(labels.level),
        ..combo.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule_model::{Jurisdiction, PriorityClass, RuleId};

    fn rule(id: &str, b: PerceptualType, n: NormType) -> AtomicRule {
        AtomicRule {
            id: RuleId::new(id),
            content: String::new(),
            perceptual_type: b,
            norm_type: n,
            action_type: ActionType::Overtake,
            speed_range: None,
            priority_class: PriorityClass::TrafficSigns,
            jurisdiction: Jurisdiction::China,
            context_tags: Default::default(),
        }
    }

    fn speed(id: &str, lo: f64, hi: f64) -> AtomicRule {
        AtomicRule {
            action_type: ActionType::SpeedLimit,
            speed_range: Some(SpeedRange::new(lo, hi)),
            ..rule(id, PerceptualType::Static, NormType::Obligatory)
        }
    }

    #[test]
    fn double_static_harmony_is_level_2() {
        let a = rule("a", PerceptualType::Static, NormType::Obligatory);
        let b = rule("b", PerceptualType::Static, NormType::Obligatory);
        let l = classify(&[&a, &b]).unwrap();
        assert_eq!(l.perceptual_combo, PerceptualCombo::DoubleStatic);
        assert_eq!(l.norm_relation, NormRelation::NormHarmony);
        assert_eq!(l.level, Level::L2);
    }

    #[test]
    fn hybrid_conflict_is_level_5() {
        let a = rule("a", PerceptualType::Dynamic, NormType::Obligatory);
        let b = rule("b", PerceptualType::Static, NormType::Forbidden);
        let l = classify(&[&a, &b]).unwrap();
        assert_eq!(l.perceptual_combo, PerceptualCombo::Hybrid);
        assert_eq!(l.norm_relation, NormRelation::NormConflict);
        assert_eq!(l.level, Level::L5);
    }

    #[test]
    fn speed_ranges() {
        let l = classify(&[&speed("a", 0.0, 30.0), &speed("b", 110.0, 120.0)]).unwrap();
        assert_eq!((l.norm_relation, l.level), (NormRelation::NormConflict, Level::L5));
        let l = classify(&[&speed("a", 0.0, 70.0), &speed("b", 0.0, 30.0)]).unwrap();
        assert_eq!(l.norm_relation, NormRelation::NormHarmony);
        // touching endpoints share a point
        let l = classify(&[&speed("a", 0.0, 30.0), &speed("b", 30.0, 50.0)]).unwrap();
        assert_eq!(l.norm_relation, NormRelation::NormHarmony);
    }

    #[test]
    fn speed_norms_ignored() {
        let mut a = speed("a", 0.0, 60.0);
        a.norm_type = NormType::Forbidden;
        let l = classify(&[&a, &speed("b", 40.0, 50.0)]).unwrap();
        assert_eq!(l.norm_relation, NormRelation::NormHarmony);
    }

    #[test]
    fn errors() {
        let a = rule("a", PerceptualType::Static, NormType::Obligatory);
        assert!(matches!(classify(&[&a]), Err(CraftError::SingletonCombo(1))));
        let mut s = speed("s", 0.0, 10.0);
        s.speed_range = None;
        let t = speed("t", 0.0, 10.0);
        assert!(matches!(classify(&[&s, &t]), Err(CraftError::MissingSpeedRange(_))));
        assert!(matches!(classify(&[&a, &t]), Err(CraftError::MixedActionTypes(_))));
    }

    #[test]
    fn three_rules_with_one_clashing_pair() {
        let a = rule("a", PerceptualType::Static, NormType::Permissive);
        let b = rule("b", PerceptualType::Static, NormType::Obligatory);
        let c = rule("c", PerceptualType::Static, NormType::Forbidden);
        assert_eq!(classify(&[&a, &b, &c]).unwrap().level, Level::L5);
        assert_eq!(classify(&[&a, &b]).unwrap().level, Level::L2);
    }
}
