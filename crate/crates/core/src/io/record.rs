//! Metrics JSON and per-replicate run records.

use serde::{Deserialize, Serialize};

use crate::metrics::MetricsReport;

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub engine_version: String,
    pub scenario_name: String,
    /// SHA-256 of the effective scenario's canonical JSON.
    pub scenario_digest: String,
    pub seed: u64,
    pub baseline: bool,
    pub trajectory_file: String,
    /// SHA-256 of the trajectory CSV bytes.
    pub trajectory_digest: String,
    pub metrics: MetricsReport,
}

/// Pretty JSON with a trailing newline.
pub fn metrics_to_json(report: &MetricsReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("metrics serialize");
    s.push('\n');
    s
}

pub fn parse_metrics(text: &str) -> Result<MetricsReport, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn record_to_json(record: &RunRecord) -> String {
    let mut s = serde_json::to_string_pretty(record).expect("record serializes");
    s.push('\n');
    s
}

pub fn parse_record(text: &str) -> Result<RunRecord, serde_json::Error> {
    serde_json::from_str(text)
}
