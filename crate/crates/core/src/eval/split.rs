//! Seeded, stratified 80/20 train/test split.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::mcq::Mcq;
use crate::rule_crafter::Level;
use crate::rule_model::Jurisdiction;

pub const TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkSplit {
    pub seed: u64,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitWarning {
    /// Too few items to put one on each side; pooled with other small strata.
    MergedStratum { level: Level, jurisdiction: Jurisdiction, size: usize },
    /// No composite questions, so the test side is empty.
    EmptyTest,
}

/// Every L1 question goes to train. Composite questions are grouped by
/// (level, jurisdiction), shuffled per group, and the test quota
/// `round(0.2 · n)` is apportioned across groups by largest remainder.
pub fn split_dataset(questions: &[Mcq], seed: u64) -> Result<(BenchmarkSplit, Vec<SplitWarning>), EvalError> {
    if questions.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut train: Vec<String> = Vec::new();
    let mut strata: BTreeMap<(Level, Jurisdiction), Vec<&str>> = BTreeMap::new();
    for q in questions {
        if q.level == Level::L1 {
            train.push(q.id.clone());
        } else {
            strata.entry((q.level, q.jurisdiction)).or_default().push(&q.id);
        }
    }
    let composite: usize = strata.values().map(Vec::len).sum();
    let mut warnings = Vec::new();
    if composite == 0 {
        warnings.push(SplitWarning::EmptyTest);
    }

    let mut groups: Vec<Vec<&str>> = Vec::new();
    let mut pool: Vec<&str> = Vec::new();
    for ((level, jurisdiction), ids) in strata {
        if (ids.len() as f64 * TEST_FRACTION).round() < 1.0 {
            warnings.push(SplitWarning::MergedStratum { level, jurisdiction, size: ids.len() });
            pool.extend(ids);
        } else {
            groups.push(ids);
        }
    }
    if !pool.is_empty() {
        groups.push(pool);
    }

    let target = (composite as f64 * TEST_FRACTION).round() as usize;
    let exact: Vec<f64> = groups.iter().map(|g| g.len() as f64 * target as f64 / composite.max(1) as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let mut missing = target - quota.iter().sum::<usize>();
    for i in order {
        if missing == 0 {
            break;
        }
        if quota[i] < groups[i].len() {
            quota[i] += 1;
            missing -= 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = Vec::new();
    for (mut ids, q) in groups.into_iter().zip(quota) {
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        test.extend(ids[..q].iter().map(|s| s.to_string()));
        train.extend(ids[q..].iter().map(|s| s.to_string()));
    }
    train.sort();
    test.sort();
    Ok((BenchmarkSplit { seed, train, test }, warnings))
}
