//! Output schema. JSON Lines files hold one [`Record`] per line: a header, a
//! timestamp, then command records. CSV files start with `#` comment lines
//! carrying the same header fields.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case", deny_unknown_fields)]
pub enum Record {
    Header(Header),
    Timestamp { unix_s: u64 },
    Membership(MembershipRecord),
    Triangulation(TriangulationRecord),
    MultidegreeTrial { trial: usize, count: Option<usize> },
    MultidegreeSummary(MultidegreeSummary),
    RealCount(RealCountRecord),
    SensitivitySummary(SensitivitySummaryRecord),
    EdSummary(EdSummary),
    EdSolution(EdSolutionRecord),
    SchubertTrial(SchubertTrial),
    SchubertSummary(SchubertSummary),
    Transversal(TransversalRecord),
    Assertion(AssertionRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub params: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembershipRecord {
    pub index: usize,
    pub source: String,
    pub rank: usize,
    pub in_variety: bool,
    pub in_image: bool,
    pub singular: bool,
    pub exceptional_ok: bool,
    pub witness: Option<[f64; 6]>,
    pub singular_values: Vec<f64>,
    pub gap_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangulationRecord {
    pub index: usize,
    pub source: String,
    pub line: [f64; 6],
    pub objective: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultidegreeSummary {
    pub d: Vec<usize>,
    pub m: usize,
    pub expected: usize,
    pub trials: usize,
    pub matching: usize,
    pub failed_trials: usize,
    pub degenerate_resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealCountRecord {
    pub samples: usize,
    pub mean: f64,
    pub std_error: f64,
    pub histogram: [usize; 3],
    pub discarded: usize,
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySummaryRecord {
    pub kind: String,
    pub m: usize,
    pub rig: String,
    pub trials: usize,
    pub ok: usize,
    pub mean: Option<f64>,
    pub std_dev: Option<f64>,
    pub min: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdSummary {
    pub m: usize,
    pub passes: usize,
    pub paths: usize,
    pub regular: usize,
    pub valid: usize,
    pub lower_bound: usize,
    pub real: usize,
    pub singular: usize,
    pub diverged: usize,
    pub truncated: usize,
    pub duplicates: usize,
    pub invalid_scale: usize,
    pub rank_one: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdSolutionRecord {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub real: bool,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchubertTrial {
    pub trial: usize,
    pub status: String,
    pub complex: usize,
    pub real: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchubertSummary {
    pub trials: usize,
    pub two: usize,
    pub degenerate: usize,
    pub other: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransversalRecord {
    pub index: usize,
    pub re: [f64; 6],
    pub im: [f64; 6],
    pub real: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssertionRecord {
    pub rule: String,
    pub value: f64,
    pub passed: bool,
}

/// Finite values only; JSON has no NaN.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Parses a JSON Lines document into records.
pub fn parse_jsonl(text: &str) -> Result<Vec<Record>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

pub fn emit_jsonl(records: &[Record]) -> String {
    records.iter().map(|r| serde_json::to_string(r).expect("records serialize") + "\n").collect()
}

/// Splits a CSV document into `#` header lines and data rows of type `T`.
pub fn parse_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<(Vec<String>, Vec<T>), csv::Error> {
    let comments = text.lines().take_while(|l| l.starts_with('#')).map(str::to_owned).collect();
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows = reader.deserialize().collect::<Result<Vec<T>, _>>()?;
    Ok((comments, rows))
}

pub fn emit_csv<T: Serialize>(comments: &[String], rows: &[T]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str(c);
        out.push('\n');
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8"));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: usize,
}
