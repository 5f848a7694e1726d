use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::FeaturizeError;
use crate::corpus::Dataset;

/// Churn metric values of one commit, keyed by metric name.
pub type GsFeatureRow = BTreeMap<String, f64>;

pub const DEFAULT_GS_METRICS: [&str; 12] =
    ["ns", "nd", "nf", "entropy", "la", "ld", "lt", "ndev", "age", "nuc", "exp", "sexp"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GsSchema {
    pub commit_id: String,
    /// Metric columns to read; the default set when absent.
    pub metrics: Option<Vec<String>>,
}

impl Default for GsSchema {
    fn default() -> Self {
        Self { commit_id: "commit_id".into(), metrics: None }
    }
}

impl GsSchema {
    pub fn metric_names(&self) -> Vec<String> {
        match &self.metrics {
            Some(m) => m.clone(),
            None => DEFAULT_GS_METRICS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Reads churn metrics for every commit of `dataset` from a CSV file.
/// Values are never imputed: an absent row, column or cell is an error.
pub fn load_gs(
    path: &Path,
    schema: &GsSchema,
    dataset: &Dataset,
) -> Result<BTreeMap<String, GsFeatureRow>, FeaturizeError> {
    let io = |e: csv::Error| FeaturizeError::Io { path: path.to_path_buf(), detail: e.to_string() };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(io)?;
    let headers = reader.headers().map_err(io)?.clone();
    let id_col = headers.iter().position(|h| h == schema.commit_id).ok_or_else(|| FeaturizeError::Io {
        path: path.to_path_buf(),
        detail: format!("missing column `{}`", schema.commit_id),
    })?;
    let metrics = schema.metric_names();
    let cols: Vec<Option<usize>> = metrics.iter().map(|m| headers.iter().position(|h| h == m)).collect();

    let mut raw: HashMap<String, csv::StringRecord> = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(io)?;
        let id = row.get(id_col).unwrap_or("").to_ascii_lowercase();
        raw.entry(id).or_insert(row);
    }

    let mut out = BTreeMap::new();
    for record in &dataset.records {
        let row = raw.get(&record.commit_id).ok_or_else(|| FeaturizeError::MissingGsRow(record.commit_id.clone()))?;
        let mut values = GsFeatureRow::new();
        for (metric, col) in metrics.iter().zip(&cols) {
            let missing =
                || FeaturizeError::MissingMetric { commit_id: record.commit_id.clone(), metric: metric.clone() };
            let cell = col.and_then(|c| row.get(c)).filter(|c| !c.is_empty()).ok_or_else(missing)?;
            let value: f64 =
                cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| FeaturizeError::NonFiniteValue {
                    commit_id: record.commit_id.clone(),
                    metric: metric.clone(),
                    value: cell.to_string(),
                })?;
            values.insert(metric.clone(), value);
        }
        out.insert(record.commit_id.clone(), values);
    }
    Ok(out)
}

pub fn attach_gs(dataset: &mut Dataset, rows: &BTreeMap<String, GsFeatureRow>) -> Result<(), FeaturizeError> {
    for record in &mut dataset.records {
        let row = rows.get(&record.commit_id).ok_or_else(|| FeaturizeError::MissingGsRow(record.commit_id.clone()))?;
        record.gs_row = Some(row.clone());
    }
    Ok(())
}
