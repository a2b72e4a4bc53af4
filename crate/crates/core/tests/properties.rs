use proptest::prelude::*;
use proptest::sample::select;

use rulescene_core::rule_crafter::classify;
use rulescene_core::rule_model::{parse_rule_file, serialize_rule_file, ContextTag};
use rulescene_core::scene::{
    parse_scene_doc, Actor, ActorType, Behavior, Lateral, Longitudinal, Relation, RoadMarker, RoadType, TimeOfDay,
    TrafficSign, Weather,
};
use rulescene_core::scene::{Environment, Oracle, Position, RoadNetworkSpec};
use rulescene_core::{
    ActionType, AtomicRule, Jurisdiction, NormType, PerceptualType, PriorityClass, RuleId, SceneDoc, SpeedRange,
};

fn actor(id: String, refs: Vec<String>) -> impl Strategy<Value = Actor> {
    (
        select(ActorType::ALL.to_vec()),
        select(refs),
        select(Relation::ALL.to_vec()),
        proptest::option::of(1u32..5000),
        select(Behavior::ALL.to_vec()),
        proptest::option::of(0u32..1500),
    )
        .prop_map(move |(actor_type, reference, relation, distance, behavior, speed)| Actor {
            id: id.clone(),
            actor_type,
            position: Position { reference, relation, distance: distance.map(|d| f64::from(d) / 10.0) },
            behavior,
            speed: speed.map(|s| f64::from(s) / 10.0),
        })
}

fn scene_doc() -> impl Strategy<Value = SceneDoc> {
    (select(RoadType::ALL.to_vec()), 0usize..4).prop_flat_map(|(road_type, extra)| {
        let landmarks: Vec<String> = road_type.landmarks().iter().map(|s| s.to_string()).collect();
        let mut actors = vec![actor("ego".into(), landmarks.clone()).boxed()];
        let mut known = vec!["ego".to_string()];
        known.extend(landmarks);
        for i in 0..extra {
            let id = format!("actor_{i}");
            actors.push(actor(id.clone(), known.clone()).boxed());
            known.push(id);
        }
        (
            select(Weather::ALL.to_vec()),
            select(TimeOfDay::ALL.to_vec()),
            Just(road_type),
            select(RoadMarker::ALL.to_vec()),
            proptest::collection::vec(select(TrafficSign::ALL.to_vec()), 0..3),
            actors,
            select(Longitudinal::ALL.to_vec()),
            select(Lateral::ALL.to_vec()),
        )
            .prop_map(|(weather, time, road_type, road_marker, traffic_signs, actors, longitudinal, lateral)| SceneDoc {
                environment: Environment { weather, time },
                road_network: RoadNetworkSpec { road_type, road_marker, traffic_signs },
                actors,
                oracle: Oracle { longitudinal, lateral },
            })
    })
}

fn atomic_rule(i: usize) -> impl Strategy<Value = AtomicRule> {
    (
        select(ActionType::ALL.to_vec()),
        select(PerceptualType::ALL.to_vec()),
        select(NormType::ALL.to_vec()),
        select(PriorityClass::ALL.to_vec()),
        0u32..150,
        0u32..50,
        proptest::collection::btree_set(
            (select(vec!["road", "weather", "agent", "sign"]), "[a-z][a-z0-9_]{0,8}")
                .prop_map(|(ns, v)| ContextTag::new(ns, &v)),
            0..4,
        ),
        "[A-Za-z][A-Za-z ,.]{0,40}",
    )
        .prop_map(move |(action_type, perceptual_type, norm_type, priority_class, lo, width, context_tags, content)| {
            AtomicRule {
                id: RuleId::new(format!("r{i}")),
                content,
                perceptual_type,
                norm_type,
                action_type,
                speed_range: action_type.is_speed().then(|| SpeedRange::new(f64::from(lo), f64::from(lo + width))),
                priority_class,
                jurisdiction: Jurisdiction::China,
                context_tags,
            }
        })
}

proptest! {
    #[test]
    fn scene_docs_round_trip(doc in scene_doc()) {
        prop_assume!(doc.validate().is_ok());
        let text = doc.to_canonical();
        let parsed = parse_scene_doc(&text).unwrap();
        prop_assert_eq!(&parsed, &doc);
        prop_assert_eq!(parsed.to_canonical(), text);
    }

    #[test]
    fn rule_files_round_trip(rules in (1usize..6).prop_flat_map(|n| (0..n).map(atomic_rule).collect::<Vec<_>>())) {
        let text = serialize_rule_file(&rules);
        let parsed = parse_rule_file(text.as_bytes(), Jurisdiction::China).unwrap();
        prop_assert_eq!(parsed, rules);
    }

    #[test]
    fn speed_intersection_is_commutative_and_contained(a in 0u32..200, b in 0u32..200, c in 0u32..200, d in 0u32..200) {
        let x = SpeedRange::new(a.min(b).into(), a.max(b).into());
        let y = SpeedRange::new(c.min(d).into(), c.max(d).into());
        prop_assert_eq!(x.intersect(&y), y.intersect(&x));
        if let Some(z) = x.intersect(&y) {
            prop_assert!(z.lower >= x.lower && z.upper <= x.upper && z.lower >= y.lower && z.upper <= y.upper);
        }
    }

    #[test]
    fn classification_ignores_member_order(rules in proptest::collection::vec(atomic_rule(0), 2..6), seed in any::<u64>()) {
        let action = rules[0].action_type;
        let rules: Vec<AtomicRule> = rules
            .into_iter()
            .enumerate()
            .map(|(i, mut r)| {
                r.id = RuleId::new(format!("r{i}"));
                r.action_type = action;
                r.speed_range = action.is_speed().then(|| r.speed_range.unwrap_or(SpeedRange::new(0.0, 50.0)));
                r
            })
            .collect();
        let mut refs: Vec<&AtomicRule> = rules.iter().collect();
        let before = classify(&refs).unwrap();
        let n = refs.len();
        refs.rotate_left((seed % n as u64) as usize);
        prop_assert_eq!(classify(&refs).unwrap(), before);
    }
}
