//! Machine-readable run reports: per-instance records plus a summary that is
//! a pure function of the records.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::{Cube, FeatureSpace};
use crate::number::format_exact;
use crate::oracle::Counterexample;

/// Statuses that do not count towards the percentages.
pub const UNDECIDED: [&str; 2] = ["indeterminate", "error"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub explain: f64,
    pub validation: f64,
    pub repair: f64,
    pub refinement: f64,
}

impl Timings {
    pub fn seconds(d: Duration) -> f64 {
        d.as_secs_f64()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRecord {
    pub predicted: String,
    pub scores: Vec<String>,
    pub instance: Vec<String>,
}

impl CounterexampleRecord {
    pub fn new(cex: &Counterexample, space: &FeatureSpace, class_names: &[String]) -> Self {
        Self {
            predicted: class_names[cex.predicted].clone(),
            scores: cex.scores.iter().map(format_exact).collect(),
            instance: cex.instance.render(space),
        }
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub duplicates: Vec<usize>,
    pub target: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    /// Literals in exactly one of candidate and explanation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetric_difference: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub counterexamples: Vec<CounterexampleRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Some oracle query of this record ran out of budget.
    #[serde(default, skip_serializing_if = "is_false")]
    pub budget_exhausted: bool,
    /// An oracle answer failed re-verification.
    #[serde(default, skip_serializing_if = "is_false")]
    pub internal_failure: bool,
    pub timings: Timings,
}

impl Record {
    pub fn new(id: usize, target: String) -> Self {
        Self {
            id,
            duplicates: Vec::new(),
            target,
            status: String::new(),
            candidate: None,
            explanation: None,
            kind: None,
            symmetric_difference: None,
            counterexamples: Vec::new(),
            error: None,
            budget_exhausted: false,
            internal_failure: false,
            timings: Timings::default(),
        }
    }
}

pub fn symmetric_difference(a: &Cube, b: &Cube) -> usize {
    a.iter().filter(|(f, v)| b.get(*f) != Some(*v)).count() + b.iter().filter(|(f, v)| a.get(*f) != Some(*v)).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeStats {
    pub count: usize,
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub stddev: f64,
}

impl SizeStats {
    pub fn of(sizes: &[usize]) -> Option<Self> {
        if sizes.is_empty() {
            return None;
        }
        let n = sizes.len() as f64;
        let mean = sizes.iter().sum::<usize>() as f64 / n;
        let var = sizes.iter().map(|&s| (s as f64 - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            count: sizes.len(),
            min: *sizes.iter().min().expect("non-empty"),
            max: *sizes.iter().max().expect("non-empty"),
            mean,
            stddev: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub records: usize,
    pub duplicates: usize,
    pub counts: BTreeMap<String, usize>,
    /// Records whose status is neither indeterminate nor error.
    pub decided: usize,
    /// Share of `decided`, in percent, rounded to two decimals.
    pub percentages: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_size: Option<SizeStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation_size: Option<SizeStats>,
    pub mean_timings: Timings,
}

impl Summary {
    pub fn from_records(records: &[Record]) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for r in records {
            *counts.entry(r.status.clone()).or_default() += 1;
        }
        let decided: usize = counts.iter().filter(|(s, _)| !UNDECIDED.contains(&s.as_str())).map(|(_, c)| c).sum();
        let percentages = counts
            .iter()
            .filter(|(s, _)| !UNDECIDED.contains(&s.as_str()))
            .map(|(s, &c)| (s.clone(), (10_000.0 * c as f64 / decided as f64).round() / 100.0))
            .collect();
        let sizes = |pick: fn(&Record) -> Option<&Vec<String>>| -> Vec<usize> {
            records.iter().filter_map(|r| pick(r).map(Vec::len)).collect()
        };
        let n = records.len().max(1) as f64;
        let mean = |pick: fn(&Timings) -> f64| records.iter().map(|r| pick(&r.timings)).sum::<f64>() / n;
        Self {
            records: records.len(),
            duplicates: records.iter().map(|r| r.duplicates.len()).sum(),
            counts,
            decided,
            percentages,
            candidate_size: SizeStats::of(&sizes(|r| r.candidate.as_ref())),
            explanation_size: SizeStats::of(&sizes(|r| r.explanation.as_ref())),
            mean_timings: Timings {
                explain: mean(|t| t.explain),
                validation: mean(|t| t.validation),
                repair: mean(|t| t.repair),
                refinement: mean(|t| t.refinement),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub classes: Vec<String>,
    pub records: Vec<Record>,
    pub summary: Summary,
}

impl Report {
    pub fn new(command: &str, mode: Option<String>, classes: Vec<String>, records: Vec<Record>) -> Self {
        let summary = Summary::from_records(&records);
        Self { command: command.to_string(), mode, classes, records, summary }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Flat CSV view, one row per record.
    pub fn to_table(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "id",
            "target",
            "status",
            "candidate_size",
            "explanation_size",
            "counterexamples",
            "explain_s",
            "validation_s",
            "repair_s",
            "refinement_s",
            "explanation",
        ])
        .expect("in-memory write");
        let size = |v: &Option<Vec<String>>| v.as_ref().map(|v| v.len().to_string()).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.id.to_string(),
                r.target.clone(),
                r.status.clone(),
                size(&r.candidate),
                size(&r.explanation),
                r.counterexamples.len().to_string(),
                format!("{:.6}", r.timings.explain),
                format!("{:.6}", r.timings.validation),
                format!("{:.6}", r.timings.repair),
                format!("{:.6}", r.timings.refinement),
                r.explanation.as_ref().map(|e| e.join(" ∧ ")).unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is UTF-8")
    }

    pub fn exit_code(&self) -> i32 {
        if self.records.iter().any(|r| r.internal_failure) {
            super::EXIT_INTERNAL
        } else if self.records.iter().any(|r| r.budget_exhausted) {
            super::EXIT_INDETERMINATE
        } else {
            super::EXIT_OK
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: usize, status: &str, size: Option<usize>) -> Record {
        let mut r = Record::new(id, "c".into());
        r.status = status.into();
        r.explanation = size.map(|n| vec!["x".to_string(); n]);
        r
    }

    #[test]
    fn percentages_cover_decided_records() {
        let records = vec![
            rec(0, "optimistic", Some(2)),
            rec(1, "realistic", Some(1)),
            rec(2, "realistic", Some(3)),
            rec(3, "indeterminate", None),
        ];
        let s = Summary::from_records(&records);
        assert_eq!(s.decided, 3);
        assert_eq!(s.counts["indeterminate"], 1);
        assert_eq!(s.percentages["realistic"], 66.67);
        assert_eq!(s.percentages["optimistic"], 33.33);
        assert!(!s.percentages.contains_key("indeterminate"));
        let sizes = s.explanation_size.unwrap();
        assert_eq!((sizes.min, sizes.max, sizes.mean), (1, 3, 2.0));
    }

    #[test]
    fn summary_survives_a_round_trip() {
        let report = Report::new(
            "audit",
            None,
            vec!["c".into()],
            vec![rec(0, "pessimistic", Some(4)), rec(1, "realistic", Some(2))],
        );
        let back: Report = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(Summary::from_records(&back.records), report.summary);
        assert_eq!(back, report);
    }

    #[test]
    fn empty_report() {
        let report = Report::new("explain", None, vec![], vec![]);
        assert_eq!(report.summary.records, 0);
        assert!(report.summary.explanation_size.is_none());
        assert_eq!(report.exit_code(), 0);
    }
}
