use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{CommitRecord, CorpusError, Dataset, Label, SourceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    /// 0/1 (or false/true) labels from manual curation.
    #[default]
    Binary,
    /// Per-commit bug counts; any count of one or more means buggy.
    BugCount,
}

/// Column names of a label file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelSchema {
    pub commit_id: String,
    pub label: String,
    pub label_kind: LabelKind,
    pub timestamp: Option<String>,
    /// Project name; defaults to the file stem.
    pub project: Option<String>,
}

impl Default for LabelSchema {
    fn default() -> Self {
        Self {
            commit_id: "commit_id".into(),
            label: "label".into(),
            label_kind: LabelKind::Binary,
            timestamp: None,
            project: None,
        }
    }
}

fn parse_label(raw: &str, kind: LabelKind) -> Option<Label> {
    let raw = raw.trim();
    match kind {
        LabelKind::Binary => match raw.to_ascii_lowercase().as_str() {
            "1" | "1.0" | "true" => Some(1),
            "0" | "0.0" | "false" => Some(0),
            _ => None,
        },
        LabelKind::BugCount => {
            let count: f64 = raw.parse().ok()?;
            if !count.is_finite() || count < 0.0 || count.fract() != 0.0 {
                return None;
            }
            Some(u8::from(count >= 1.0))
        }
    }
}

/// Accepts epoch seconds, RFC 3339, `YYYY-MM-DD HH:MM:SS` (UTC) or a bare date.
pub(crate) fn parse_timestamp(raw: &str) -> Option<i64> {
    let raw = raw.trim();
    if let Ok(secs) = raw.parse::<i64>() {
        return Some(secs);
    }
    if let Ok(secs) = raw.parse::<f64>() {
        return secs.is_finite().then_some(secs as i64);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.timestamp());
    }
    if let Ok(dt) = DateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S %z") {
        return Some(dt.timestamp());
    }
    if let Ok(dt) = NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S") {
        return Some(dt.and_utc().timestamp());
    }
    if let Ok(d) = NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp());
    }
    None
}

fn is_hex_id(s: &str) -> bool {
    (4..=64).contains(&s.len()) && s.bytes().all(|b| b.is_ascii_hexdigit())
}

/// Reads a label CSV into a dataset, one record per row in file order.
pub fn load_labels(path: &Path, schema: &LabelSchema) -> Result<Dataset, CorpusError> {
    let csv_err = |source| CorpusError::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let column =
        |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| CorpusError::MissingColumn(name.to_string()));
    let id_col = column(&schema.commit_id)?;
    let label_col = column(&schema.label)?;
    let ts_col = schema.timestamp.as_deref().map(column).transpose()?;

    let project = schema
        .project
        .clone()
        .unwrap_or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    let source_kind = match schema.label_kind {
        LabelKind::Binary => SourceKind::Manual,
        LabelKind::BugCount => SourceKind::Automatic,
    };

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let record_no = i + 1;
        let raw_id = row.get(id_col).unwrap_or("");
        if !is_hex_id(raw_id) {
            return Err(CorpusError::InvalidCommitId { record: record_no, value: raw_id.to_string() });
        }
        let commit_id = raw_id.to_ascii_lowercase();
        if !seen.insert(commit_id.clone()) {
            return Err(CorpusError::DuplicateCommit { commit_id, record: record_no });
        }
        let raw_label = row.get(label_col).unwrap_or("");
        let label = parse_label(raw_label, schema.label_kind)
            .ok_or_else(|| CorpusError::UnparsableLabel { record: record_no, value: raw_label.to_string() })?;
        let timestamp = match ts_col {
            Some(col) => {
                let raw = row.get(col).unwrap_or("");
                if raw.is_empty() {
                    None
                } else {
                    let ts = parse_timestamp(raw).filter(|t| *t > 0).ok_or_else(|| {
                        CorpusError::UnparsableTimestamp { record: record_no, value: raw.to_string() }
                    })?;
                    Some(ts)
                }
            }
            None => None,
        };
        records.push(CommitRecord {
            commit_id,
            project: project.clone(),
            timestamp,
            label,
            patch_text: String::new(),
            gs_row: None::<BTreeMap<String, f64>>,
        });
    }
    if records.is_empty() {
        return Err(CorpusError::EmptyDataset(project));
    }
    Ok(Dataset { project, source_kind, records })
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn minimal_file() {
        let f = write("commit_id,label\nabc1,1\ndef2,0\n");
        let ds = load_labels(f.path(), &LabelSchema::default()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.labels(), vec![1, 0]);
        assert_eq!(ds.source_kind, SourceKind::Manual);
        assert_eq!(ds.records[0].timestamp, None);
    }

    #[test]
    fn duplicate_commit_rejected() {
        let f = write("commit_id,label\nabc1,1\nabc1,0\n");
        let err = load_labels(f.path(), &LabelSchema::default()).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateCommit { ref commit_id, record: 2 } if commit_id == "abc1"));
    }

    #[test]
    fn missing_column_and_bad_label() {
        let f = write("sha,label\nabc1,1\n");
        assert!(
            matches!(load_labels(f.path(), &LabelSchema::default()), Err(CorpusError::MissingColumn(c)) if c == "commit_id")
        );
        let f = write("commit_id,label\nabc1,maybe\n");
        assert!(matches!(
            load_labels(f.path(), &LabelSchema::default()),
            Err(CorpusError::UnparsableLabel { record: 1, .. })
        ));
        let f = write("commit_id,label\n");
        assert!(matches!(load_labels(f.path(), &LabelSchema::default()), Err(CorpusError::EmptyDataset(_))));
    }

    #[test]
    fn bug_counts_map_to_labels() {
        let counts = [0u32, 1, 2, 0, 7, 3, 0, 1];
        let mut text = String::from("id,bugcount,date\n");
        for (i, c) in counts.iter().enumerate() {
            text.push_str(&format!("{:04x},{c},2020-01-{:02}\n", i + 0xa0, i + 1));
        }
        let f = write(&text);
        let schema = LabelSchema {
            commit_id: "id".into(),
            label: "bugcount".into(),
            label_kind: LabelKind::BugCount,
            timestamp: Some("date".into()),
            project: Some("qt".into()),
        };
        let ds = load_labels(f.path(), &schema).unwrap();
        assert_eq!(ds.source_kind, SourceKind::Automatic);
        assert_eq!(ds.project, "qt");
        for (rec, count) in ds.records.iter().zip(counts) {
            assert_eq!(rec.label == 1, count >= 1);
        }
        assert_eq!(ds.records[0].timestamp, Some(1_577_836_800));
        let f = write("id,bugcount\nabcd,-1\n");
        assert!(load_labels(f.path(), &schema).is_err());
    }

    #[test]
    fn timestamp_formats() {
        assert_eq!(parse_timestamp("1577836800"), Some(1_577_836_800));
        assert_eq!(parse_timestamp("2020-01-01T00:00:00Z"), Some(1_577_836_800));
        assert_eq!(parse_timestamp("2020-01-01 01:00:00 +0100"), Some(1_577_836_800));
        assert_eq!(parse_timestamp("2020-01-01 00:00:00"), Some(1_577_836_800));
        assert_eq!(parse_timestamp("yesterday"), None);
    }

    #[test]
    fn reload_is_identical() {
        let f = write("commit_id,label,ts\nabc1,1,5\ndef2,0,3\nfff3,1,9\n");
        let schema = LabelSchema { timestamp: Some("ts".into()), ..LabelSchema::default() };
        assert_eq!(load_labels(f.path(), &schema).unwrap(), load_labels(f.path(), &schema).unwrap());
    }
}
