//! Labeled commit datasets: ingest, patch retrieval and chronological splits.

mod git;
mod labels;
mod split;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use git::{committer_timestamp, fetch_patch, fetch_patches, locate_commit};
pub use labels::{load_labels, LabelKind, LabelSchema};
pub use split::split_time_ordered;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("commit {commit_id} listed twice (record {record})")]
    DuplicateCommit { commit_id: String, record: usize },
    #[error("record {record}: unparsable label `{value}`")]
    UnparsableLabel { record: usize, value: String },
    #[error("record {record}: unparsable timestamp `{value}`")]
    UnparsableTimestamp { record: usize, value: String },
    #[error("record {record}: `{value}` is not a hex commit id")]
    InvalidCommitId { record: usize, value: String },
    #[error("dataset {0} has no records")]
    EmptyDataset(String),
    #[error("commit {0} not found")]
    CommitNotFound(String),
    #[error("repository {path} unavailable: {detail}")]
    RepoUnavailable { path: PathBuf, detail: String },
    #[error("commit {0} has no timestamp")]
    MissingTimestamp(String),
    #[error("train fraction {fraction} of {records} records leaves an empty side")]
    EmptySplit { fraction: f64, records: usize },
    #[error("dataset line {line}: {detail}")]
    BadDatasetLine { line: usize, detail: String },
}

/// Label convention: 1 marks a bug-inducing commit, 0 a clean one.
pub type Label = u8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub commit_id: String,
    pub project: String,
    /// Seconds since the epoch.
    pub timestamp: Option<i64>,
    pub label: Label,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub patch_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gs_row: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Manual,
    Automatic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub project: String,
    pub source_kind: SourceKind,
    pub records: Vec<CommitRecord>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn label_counts(&self) -> (usize, usize) {
        let buggy = self.records.iter().filter(|r| r.label == 1).count();
        (buggy, self.records.len() - buggy)
    }

    pub fn has_both_labels(&self) -> bool {
        let (buggy, clean) = self.label_counts();
        buggy > 0 && clean > 0
    }

    pub fn labels(&self) -> Vec<Label> {
        self.records.iter().map(|r| r.label).collect()
    }
}

/// One line of the canonical dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetLine {
    pub commit_id: String,
    pub project: String,
    pub timestamp: Option<i64>,
    pub label: Label,
    pub patch: Option<String>,
}

/// Writes one JSON object per record. `patch_path` names where each record's
/// patch text is stored.
pub fn write_dataset_jsonl<W: Write>(
    dataset: &Dataset,
    mut out: W,
    patch_path: impl Fn(&CommitRecord) -> Option<String>,
) -> std::io::Result<()> {
    for record in &dataset.records {
        let line = DatasetLine {
            commit_id: record.commit_id.clone(),
            project: record.project.clone(),
            timestamp: record.timestamp,
            label: record.label,
            patch: patch_path(record),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_dataset_jsonl<R: BufRead>(input: R) -> Result<Vec<DatasetLine>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::BadDatasetLine { line: i + 1, detail: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: DatasetLine = serde_json::from_str(&line)
            .map_err(|e| CorpusError::BadDatasetLine { line: i + 1, detail: e.to_string() })?;
        out.push(parsed);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let ds = Dataset {
            project: "p".into(),
            source_kind: SourceKind::Manual,
            records: vec![CommitRecord {
                commit_id: "abc1".into(),
                project: "p".into(),
                timestamp: Some(10),
                label: 1,
                patch_text: String::new(),
                gs_row: None,
            }],
        };
        let mut buf = Vec::new();
        write_dataset_jsonl(&ds, &mut buf, |r| Some(format!("patches/{}.diff", r.commit_id))).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "{\"commit_id\":\"abc1\",\"project\":\"p\",\"timestamp\":10,\"label\":1,\"patch\":\"patches/abc1.diff\"}\n"
        );
        let back = read_dataset_jsonl(&buf[..]).unwrap();
        assert_eq!(back[0].patch.as_deref(), Some("patches/abc1.diff"));
    }
}
