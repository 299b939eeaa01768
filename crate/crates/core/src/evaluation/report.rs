use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Bucket;

/// One reported number. Experiment settings (bump size, drop count, ...)
/// are folded into the metric name, e.g. `rmse_curve[bump=0.05]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub bucket: Bucket,
    pub metric: String,
    pub value: f64,
}

/// A fit that failed inside an experiment. Failed replications are left
/// out of every average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub context: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub estimator_config: serde_json::Value,
    pub seed: Option<u64>,
    pub settings: serde_json::Value,
}

/// Run metadata. Only the command-line front end fills this in, so library
/// output stays byte-for-byte reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub generated_at: String,
}

/// Curve sampled on a set of tenors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub label: String,
    pub tenors: Vec<f64>,
    pub yields: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub experiment: String,
    pub estimator: String,
    pub metrics: Vec<MetricRow>,
    pub failure_count: usize,
    pub failures: Vec<FailureRecord>,
    pub provenance: Provenance,
    pub detail: super::ExperimentDetail,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

impl EvaluationReport {
    pub fn metric(&self, bucket: Bucket, name: &str) -> Option<f64> {
        self.metrics
            .iter()
            .find(|m| m.bucket == bucket && m.metric == name)
            .map(|m| m.value)
    }
}

/// Row of the flat CSV export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub experiment: String,
    pub estimator: String,
    pub bucket: String,
    pub metric: String,
    pub value: f64,
    pub seed: Option<u64>,
}

pub fn csv_rows(reports: &[EvaluationReport]) -> Vec<CsvRow> {
    reports
        .iter()
        .flat_map(|r| {
            r.metrics.iter().map(|m| CsvRow {
                experiment: r.experiment.clone(),
                estimator: r.estimator.clone(),
                bucket: m.bucket.label().to_string(),
                metric: m.metric.clone(),
                value: m.value,
                seed: r.provenance.seed,
            })
        })
        .collect()
}

/// Writes one metric per row: `experiment,estimator,bucket,metric,value,seed`.
pub fn write_reports_csv<W: Write>(reports: &[EvaluationReport], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for row in csv_rows(reports) {
        out.serialize(row).map_err(csv_error)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<csv>", io),
        other => Error::Domain(format!("report csv: {other:?}")),
    }
}
