//! Verification reports: per-tuple records, a summary, and CSV/JSON output.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sum_value::SumValue;

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 19] = [
    "target", "p", "kappa", "lambda", "r_or_s", "q1", "q2", "m1", "m2", "n1p", "n1pp", "n2", "oracle_re", "oracle_im",
    "fast_re", "fast_im", "bound", "ratio", "pass",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    IoFailure { path: String, source: std::io::Error },
    #[error("malformed report: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

/// One checked claim at one parameter tuple.
///
/// `oracle` is the reference value and `fast` the value under test. For
/// identities `bound` is the combined error budget, for vanishing claims the
/// budget of the value, and for inequalities the explicit bound; `ratio` is
/// the checked quantity divided by `bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub target: String,
    pub claim: String,
    pub p: Option<u64>,
    pub kappa: Option<u32>,
    pub lambda: Option<u32>,
    pub r_or_s: Option<u32>,
    pub q1: Option<u64>,
    pub q2: Option<u64>,
    pub m1: Option<i64>,
    pub m2: Option<i64>,
    pub n1p: Option<u64>,
    pub n1pp: Option<u64>,
    pub n2: Option<i64>,
    pub oracle_re: f64,
    pub oracle_im: f64,
    pub fast_re: f64,
    pub fast_im: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Non-finite values have no JSON representation; they are clamped.
fn finite(x: f64) -> f64 {
    if x.is_nan() {
        f64::MAX
    } else {
        x.clamp(f64::MIN, f64::MAX)
    }
}

fn ratio_of(x: f64, bound: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        finite(x / bound)
    }
}

impl Record {
    pub fn new(target: &str, claim: &str) -> Self {
        Self {
            target: target.to_string(),
            claim: claim.to_string(),
            p: None,
            kappa: None,
            lambda: None,
            r_or_s: None,
            q1: None,
            q2: None,
            m1: None,
            m2: None,
            n1p: None,
            n1pp: None,
            n2: None,
            oracle_re: 0.0,
            oracle_im: 0.0,
            fast_re: 0.0,
            fast_im: 0.0,
            bound: 0.0,
            ratio: 0.0,
            pass: true,
            extras: BTreeMap::new(),
            note: None,
        }
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extras.insert(key.to_string(), finite(value));
        self
    }

    fn set_values(&mut self, oracle: SumValue, fast: SumValue) {
        self.oracle_re = finite(oracle.value.re);
        self.oracle_im = finite(oracle.value.im);
        self.fast_re = finite(fast.value.re);
        self.fast_im = finite(fast.value.im);
    }

    /// `oracle = fast` within the combined budgets.
    pub fn identity(mut self, oracle: SumValue, fast: SumValue) -> Self {
        self.set_values(oracle, fast);
        let diff = (oracle.value - fast.value).norm();
        self.bound = finite(oracle.error_budget + fast.error_budget);
        self.ratio = ratio_of(diff, self.bound);
        self.pass = diff <= self.bound;
        self
    }

    /// `value = 0` within its budget.
    pub fn vanishing(mut self, value: SumValue) -> Self {
        self.set_values(value, SumValue::zero());
        self.bound = finite(value.error_budget);
        self.ratio = ratio_of(value.norm(), self.bound);
        self.pass = value.vanishes();
        self
    }

    /// `|value| ≤ bound`, with a relative slack `slack` for rounding.
    pub fn upper_bound(mut self, value: SumValue, bound: f64, slack: f64) -> Self {
        self.set_values(value, value);
        self.bound = finite(bound);
        self.ratio = ratio_of(value.norm(), bound);
        self.pass = value.norm() <= bound * (1.0 + slack) + value.error_budget;
        self
    }

    /// `|value| / bound` recorded without a pass criterion.
    pub fn observed(mut self, value: SumValue, bound: f64) -> Self {
        self.set_values(value, value);
        self.bound = finite(bound);
        self.ratio = ratio_of(value.norm(), bound);
        self.pass = self.ratio.is_finite();
        self
    }

    /// A yes/no claim; `measured` is stored as the oracle and `limit` as the bound.
    pub fn check(mut self, holds: bool, measured: f64, limit: f64) -> Self {
        self.oracle_re = finite(measured);
        self.fast_re = finite(measured);
        self.bound = finite(limit);
        self.ratio = ratio_of(measured, limit);
        self.pass = holds;
        self
    }

    /// A per-tuple evaluation failure.
    pub fn failed(mut self, message: String) -> Self {
        self.pass = false;
        self.note = Some(message);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub max_ratio: f64,
    pub pass: bool,
}

impl Summary {
    pub fn of(records: &[Record]) -> Self {
        let passed = records.iter().filter(|r| r.pass).count();
        Self {
            total: records.len(),
            passed,
            failed: records.len() - passed,
            max_ratio: records.iter().map(|r| r.ratio).fold(0.0, f64::max),
            pass: passed == records.len(),
        }
    }
}

/// Run metadata that legitimately differs between runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub timestamp_unix: u64,
    pub wall_seconds: f64,
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub target: String,
    pub records: Vec<Record>,
    pub summary: Summary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_info: Option<RunInfo>,
}

impl Report {
    pub fn new(target: &str, records: Vec<Record>) -> Self {
        let summary = Summary::of(&records);
        Self { schema_version: SCHEMA_VERSION, target: target.to_string(), records, summary, run_info: None }
    }

    pub fn pass(&self) -> bool {
        self.summary.pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// JSON without the run metadata; identical across repeated and parallel runs.
    pub fn canonical_json(&self) -> String {
        Report { run_info: None, ..self.clone() }.to_json()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        for r in &self.records {
            let opt = |x: Option<String>| x.unwrap_or_default();
            w.write_record([
                r.target.clone(),
                opt(r.p.map(|x| x.to_string())),
                opt(r.kappa.map(|x| x.to_string())),
                opt(r.lambda.map(|x| x.to_string())),
                opt(r.r_or_s.map(|x| x.to_string())),
                opt(r.q1.map(|x| x.to_string())),
                opt(r.q2.map(|x| x.to_string())),
                opt(r.m1.map(|x| x.to_string())),
                opt(r.m2.map(|x| x.to_string())),
                opt(r.n1p.map(|x| x.to_string())),
                opt(r.n1pp.map(|x| x.to_string())),
                opt(r.n2.map(|x| x.to_string())),
                float17(r.oracle_re),
                float17(r.oracle_im),
                float17(r.fast_re),
                float17(r.fast_im),
                float17(r.bound),
                float17(r.ratio),
                r.pass.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii fields")
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        serde_json::from_str(text).map_err(|e| ReportError::Parse(e.to_string()))
    }
}

/// 17 significant digits.
fn float17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn emit_report(report: &Report, format: Format, path: &Path) -> Result<(), ReportError> {
    let text = match format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    std::fs::write(path, text).map_err(|source| ReportError::IoFailure { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn sample() -> Report {
        let v = SumValue::new(Complex64::new(0.1 + 0.2, -1.0 / 3.0), 1e-15);
        let records = vec![
            Record::new("t", "identity").identity(v, v),
            Record { p: Some(3), n2: Some(-4), ..Record::new("t", "bound").upper_bound(v, 0.25, 0.0) },
            Record::new("t", "observed").observed(v, 7.0).with_extra("x", std::f64::consts::PI),
        ];
        Report::new("t", records)
    }

    #[test]
    fn summary_tracks_records() {
        let r = sample();
        assert_eq!(r.summary.total, 3);
        assert_eq!(r.summary.failed, 1);
        assert!(!r.pass());
        let max = r.records.iter().map(|x| x.ratio).fold(0.0, f64::max);
        assert_eq!(r.summary.max_ratio, max);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut r = sample();
        r.run_info = Some(RunInfo { timestamp_unix: 1, wall_seconds: 0.5, jobs: 2 });
        let back = Report::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        for (a, b) in back.records.iter().zip(&r.records) {
            assert_eq!(a.oracle_im.to_bits(), b.oracle_im.to_bits());
        }
        assert!(!r.canonical_json().contains("run_info"));
    }

    #[test]
    fn csv_layout() {
        let csv = Report::new("t", vec![]).to_csv();
        assert_eq!(csv, format!("{}\n", CSV_COLUMNS.join(",")));
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].ends_with(",true"));
        assert!(lines[2].ends_with(",false"));
        assert_eq!(lines[2].split(',').count(), 19);
        let bound: f64 = lines[2].split(',').nth(16).unwrap().parse().unwrap();
        assert_eq!(bound, 0.25);
    }

    #[test]
    fn non_finite_values_are_clamped() {
        let v = SumValue::new(Complex64::new(1.0, 0.0), 0.0);
        let r = Record::new("t", "b").upper_bound(v, 0.0, 0.0);
        assert_eq!(r.ratio, f64::MAX);
        assert!(Report::from_json(&Report::new("t", vec![r]).to_json()).is_ok());
    }
}
