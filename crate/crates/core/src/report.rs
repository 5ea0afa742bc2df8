//! Experiment reports: per-case records, summary statistics, verdicts and
//! the JSON / CSV writers.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Skipped,
}

/// One sample / parameter combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub index: usize,
    /// Parameter combination the case belongs to, e.g. `t=0.3,p=2`.
    pub group: String,
    pub spacing: Option<f64>,
    pub sample: Option<usize>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    /// Ratio or residual the verdict looks at.
    pub value: Option<f64>,
    pub status: Status,
    pub note: String,
}

impl Record {
    pub fn new(group: impl Into<String>) -> Self {
        Record {
            index: 0,
            group: group.into(),
            spacing: None,
            sample: None,
            lhs: None,
            rhs: None,
            value: None,
            status: Status::Ok,
            note: String::new(),
        }
    }

    pub fn spacing(mut self, h: f64) -> Self {
        self.spacing = Some(h);
        self
    }

    pub fn sample(mut self, k: usize) -> Self {
        self.sample = Some(k);
        self
    }

    /// lhs, rhs and value = lhs / rhs; a vanishing or non-finite quotient skips the case.
    pub fn ratio(mut self, lhs: f64, rhs: f64) -> Self {
        self.lhs = Some(lhs);
        self.rhs = Some(rhs);
        let q = lhs / rhs;
        if rhs.abs() < 1e-300 || !q.is_finite() {
            self.status = Status::Skipped;
            self.note = "degenerate denominator".into();
        } else {
            self.value = Some(q);
        }
        self
    }

    pub fn value(mut self, v: f64) -> Self {
        if v.is_finite() {
            self.value = Some(v);
        } else {
            self.status = Status::Skipped;
            self.note = "non-finite value".into();
        }
        self
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.note = n.into();
        self
    }

    pub fn skipped(mut self, reason: impl Into<String>) -> Self {
        self.status = Status::Skipped;
        self.value = None;
        self.note = reason.into();
        self
    }
}

/// A verdict threshold comparison `value <op> threshold`. `value` is None
/// when the measured quantity is not finite, e.g. a max over no records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub op: String,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value: value.is_finite().then_some(value), op: "<=".into(), threshold, pass: value <= threshold }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value: value.is_finite().then_some(value), op: ">=".into(), threshold, pass: value >= threshold }
    }

    pub fn greater(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value: value.is_finite().then_some(value), op: ">".into(), threshold, pass: value > threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub skipped: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub median: Option<f64>,
    /// max value at the finest spacing over max value at the next finest.
    pub trend: Option<f64>,
}

pub fn summarize(records: &[Record]) -> Summary {
    let mut vals: Vec<f64> = records.iter().filter(|r| r.status == Status::Ok).filter_map(|r| r.value).collect();
    vals.sort_by(f64::total_cmp);
    let median = match vals.len() {
        0 => None,
        n if n % 2 == 1 => Some(vals[n / 2]),
        n => Some(0.5 * (vals[n / 2 - 1] + vals[n / 2])),
    };
    let mut spacings: Vec<f64> = records.iter().filter_map(|r| r.spacing).collect();
    spacings.sort_by(f64::total_cmp);
    spacings.dedup();
    let level_max = |h: f64| {
        records
            .iter()
            .filter(|r| r.status == Status::Ok && r.spacing == Some(h))
            .filter_map(|r| r.value)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    };
    let trend = if spacings.len() >= 2 {
        match (level_max(spacings[0]), level_max(spacings[1])) {
            (Some(a), Some(b)) if b != 0.0 => Some(a / b),
            _ => None,
        }
    } else {
        None
    };
    Summary {
        count: vals.len(),
        skipped: records.iter().filter(|r| r.status == Status::Skipped).count(),
        min: vals.first().copied(),
        max: vals.last().copied(),
        median,
        trend,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    VacuousPass,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self != Verdict::Fail
    }
}

/// Full nested report. Contains nothing run-dependent besides config and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    /// Resolved parameters including every verdict threshold.
    pub config: serde_json::Value,
    pub records: Vec<Record>,
    pub summary: Summary,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
}

impl ExperimentReport {
    pub fn new(experiment: &str, seed: u64, config: serde_json::Value, mut records: Vec<Record>, checks: Vec<Check>) -> Self {
        for (i, r) in records.iter_mut().enumerate() {
            r.index = i;
        }
        let verdict = if records.is_empty() {
            Verdict::VacuousPass
        } else if checks.iter().all(|c| c.pass) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        let summary = summarize(&records);
        ExperimentReport { experiment: experiment.into(), seed, config, records, summary, checks, verdict }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Column order of the cases CSV; see `schema/cases.schema.md`.
pub const CSV_COLUMNS: [&str; 10] = ["index", "group", "spacing", "sample", "lhs", "rhs", "value", "status", "note", "experiment"];

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    index: usize,
    group: String,
    spacing: Option<f64>,
    sample: Option<usize>,
    lhs: Option<f64>,
    rhs: Option<f64>,
    value: Option<f64>,
    status: Status,
    note: String,
    experiment: String,
}

pub fn cases_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if report.records.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for r in &report.records {
        w.serialize(CsvRow {
            index: r.index,
            group: r.group.clone(),
            spacing: r.spacing,
            sample: r.sample,
            lhs: r.lhs,
            rhs: r.rhs,
            value: r.value,
            status: r.status,
            note: r.note.clone(),
            experiment: report.experiment.clone(),
        })?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

/// Parse a cases CSV back into records.
pub fn read_cases_csv(text: &str) -> Result<Vec<Record>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in rd.deserialize() {
        let r: CsvRow = row?;
        out.push(Record {
            index: r.index,
            group: r.group,
            spacing: r.spacing,
            sample: r.sample,
            lhs: r.lhs,
            rhs: r.rhs,
            value: r.value,
            status: r.status,
            note: r.note,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Write `<dir>/<experiment>.report.json` or `<dir>/<experiment>.cases.csv`.
pub fn write_report(report: &ExperimentReport, format: Format, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let (path, text) = match format {
        Format::Json => (dir.join(format!("{}.report.json", report.experiment)), report.to_json()?),
        Format::Csv => (dir.join(format!("{}.cases.csv", report.experiment)), cases_csv(report)?),
    };
    fs::write(&path, text)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> ExperimentReport {
        let recs = vec![
            Record::new("a").spacing(0.5).sample(0).ratio(1.0, 2.0),
            Record::new("a").spacing(0.25).sample(0).ratio(3.0, 2.0),
            Record::new("a").spacing(0.25).sample(1).ratio(1.0, 0.0),
            Record::new("b").value(0.75).note("x, \"quoted\""),
        ];
        ExperimentReport::new("demo", 7, serde_json::json!({"k": 1}), recs, vec![Check::at_most("max", 1.5, 2.0)])
    }

    #[test]
    fn empty_records_are_vacuous() {
        let r = ExperimentReport::new("demo", 1, serde_json::json!({}), vec![], vec![Check::at_most("x", 3.0, 1.0)]);
        assert_eq!(r.verdict, Verdict::VacuousPass);
        assert!(r.verdict.passed());
        assert_eq!(r.summary.count, 0);
        assert!(cases_csv(&r).unwrap().starts_with("index,group"));
        assert!(r.to_json().unwrap().contains("vacuous-pass"));
    }

    #[test]
    fn summary_and_degenerate_cases() {
        let r = sample_report();
        assert_eq!(r.summary.count, 3);
        assert_eq!(r.summary.skipped, 1);
        assert_eq!(r.summary.max, Some(1.5));
        assert_eq!(r.summary.median, Some(0.75));
        assert_eq!(r.summary.trend, Some(3.0));
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn csv_round_trip_preserves_summary() {
        let r = sample_report();
        let back = read_cases_csv(&cases_csv(&r).unwrap()).unwrap();
        assert_eq!(back, r.records);
        assert_eq!(summarize(&back), r.summary);
    }
}
