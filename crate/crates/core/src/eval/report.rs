//! Stratified accuracy tables.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::prompt::Condition;
use super::run::EvalRecord;
use super::EvalError;
use crate::mcq::Mcq;
use crate::rule_crafter::Level;
use crate::rule_model::Jurisdiction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Level,
    Jurisdiction,
    NumRules,
    Overall,
}

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Level => "level",
            Dimension::Jurisdiction => "jurisdiction",
            Dimension::NumRules => "num_rules",
            Dimension::Overall => "overall",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Tally {
    pub correct: u32,
    pub attempted: u32,
}

impl Tally {
    pub fn accuracy(self) -> Option<f64> {
        (self.attempted > 0).then(|| self.correct as f64 / self.attempted as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub dimension: Dimension,
    pub stratum: String,
    /// One tally per repeat, in [`Report::repeats`] order.
    pub per_repeat: Vec<Tally>,
}

impl ReportRow {
    pub fn accuracy(&self, repeat_idx: usize) -> Option<f64> {
        self.per_repeat[repeat_idx].accuracy()
    }

    /// Mean of the per-repeat accuracies; absent when every repeat is empty.
    pub fn mean(&self) -> Option<f64> {
        let accs: Vec<f64> = self.per_repeat.iter().filter_map(|t| t.accuracy()).collect();
        (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64)
    }

    pub fn attempted(&self) -> u32 {
        self.per_repeat.iter().map(|t| t.attempted).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub condition: Condition,
    pub repeats: Vec<u32>,
    pub rows: Vec<ReportRow>,
    pub records: usize,
    /// Responses with no extractable choice (scored incorrect).
    pub unparsed: usize,
    /// Transport failures (scored incorrect).
    pub failed: usize,
}

/// Ratio as a percentage with two decimals, `0.7` → `70.00`.
pub fn format_pct(ratio: f64) -> String {
    let hundredths = (ratio * 10_000.0 + 1e-9).round() as u64;
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

fn cell(v: Option<f64>) -> String {
    v.map(format_pct).unwrap_or_default()
}

pub fn compute_report(records: &[EvalRecord], questions: &[Mcq]) -> Result<Report, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyReport);
    }
    let by_id: BTreeMap<&str, &Mcq> = questions.iter().map(|q| (q.id.as_str(), q)).collect();
    let conditions: BTreeSet<Condition> = records.iter().map(|r| r.condition).collect();
    if conditions.len() > 1 {
        return Err(EvalError::MixedConditions(conditions.iter().map(|c| c.to_string()).collect()));
    }
    let repeats: Vec<u32> = records.iter().map(|r| r.repeat).collect::<BTreeSet<_>>().into_iter().collect();

    let mut strata: Vec<(Dimension, String)> = Vec::new();
    strata.extend(Level::ALL.iter().map(|l| (Dimension::Level, l.to_string())));
    strata.extend(Jurisdiction::ALL.iter().map(|j| (Dimension::Jurisdiction, j.to_string())));
    strata.extend((1..=5).map(|n: usize| (Dimension::NumRules, n.to_string())));
    strata.push((Dimension::Overall, "all".to_string()));
    let mut tallies: BTreeMap<(Dimension, String), Vec<Tally>> =
        strata.iter().map(|k| (k.clone(), vec![Tally::default(); repeats.len()])).collect();

    for r in records {
        let q = by_id.get(r.question_id.as_str()).ok_or_else(|| EvalError::UnknownQuestion(r.question_id.clone()))?;
        let ri = repeats.binary_search(&r.repeat).expect("repeat collected above");
        for key in [
            (Dimension::Level, q.level.to_string()),
            (Dimension::Jurisdiction, q.jurisdiction.to_string()),
            (Dimension::NumRules, q.num_rules.to_string()),
            (Dimension::Overall, "all".to_string()),
        ] {
            let t = &mut tallies.get_mut(&key).expect("every stratum is pre-seeded")[ri];
            t.attempted += 1;
            t.correct += u32::from(r.correct);
        }
    }
    let rows = strata
        .into_iter()
        .map(|k| {
            let per_repeat = tallies.remove(&k).unwrap();
            ReportRow { dimension: k.0, stratum: k.1, per_repeat }
        })
        .collect();
    Ok(Report {
        condition: *conditions.iter().next().unwrap(),
        repeats,
        rows,
        records: records.len(),
        unparsed: records.iter().filter(|r| r.error.is_none() && r.extracted_choice.is_none()).count(),
        failed: records.iter().filter(|r| r.error.is_some()).count(),
    })
}

impl Report {
    pub fn row(&self, dimension: Dimension, stratum: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.dimension == dimension && r.stratum == stratum)
    }

    /// One line per stratum; empty cells are absent strata.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["condition".to_string(), "dimension".into(), "stratum".into()];
        header.extend(self.repeats.iter().map(|r| format!("run_{r}")));
        header.extend(["mean".into(), "attempted".into()]);
        w.write_record(&header).expect("in-memory csv");
        for row in &self.rows {
            let mut rec = vec![self.condition.to_string(), row.dimension.as_str().to_string(), row.stratum.clone()];
            rec.extend((0..self.repeats.len()).map(|i| cell(row.accuracy(i))));
            rec.push(cell(row.mean()));
            rec.push(row.attempted().to_string());
            w.write_record(&rec).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Runs as rows, strata as columns, one table per dimension. Absent cells print `–`.
    pub fn to_markdown(&self) -> String {
        let mut out = format!(
            "# Accuracy ({})\n\nRecords: {}. Unparsed answers: {}. Failed requests: {}.\n",
            self.condition, self.records, self.unparsed, self.failed
        );
        let tables = [
            ("By level", vec![Dimension::Level, Dimension::Overall]),
            ("By jurisdiction", vec![Dimension::Jurisdiction]),
            ("By number of rules", vec![Dimension::NumRules]),
        ];
        for (title, dims) in tables {
            let cols: Vec<&ReportRow> = self.rows.iter().filter(|r| dims.contains(&r.dimension)).collect();
            let md = |v: Option<f64>| v.map(format_pct).unwrap_or_else(|| "–".into());
            out.push_str(&format!("\n## {title}\n\n| Run |"));
            for c in &cols {
                let name = if c.dimension == Dimension::Overall { "Overall" } else { &c.stratum };
                out.push_str(&format!(" {name} |"));
            }
            out.push_str("\n|---|");
            out.push_str(&"---:|".repeat(cols.len()));
            out.push('\n');
            for (i, r) in self.repeats.iter().enumerate() {
                out.push_str(&format!("| {r} |"));
                for c in &cols {
                    out.push_str(&format!(" {} |", md(c.accuracy(i))));
                }
                out.push('\n');
            }
            out.push_str("| Mean |");
            for c in &cols {
                out.push_str(&format!(" {} |", md(c.mean())));
            }
            out.push('\n');
        }
        out
    }
}
