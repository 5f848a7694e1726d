use std::path::Path;

use super::{FeatureMatrix, FeatureVocabulary, FeaturizeError, Namespace, SparseRow};

fn io_err(path: &Path, e: impl ToString) -> FeaturizeError {
    FeaturizeError::Io { path: path.to_path_buf(), detail: e.to_string() }
}

/// Writes `vocabulary.csv` (index,namespace,name) and `rows.csv`
/// (commit_id,features,label,timestamp) where features are `col:value` pairs
/// joined by `;`.
pub fn write_sidecar(matrix: &FeatureMatrix, vocab_path: &Path, rows_path: &Path) -> Result<(), FeaturizeError> {
    let mut w = csv::Writer::from_path(vocab_path).map_err(|e| io_err(vocab_path, e))?;
    w.write_record(["index", "namespace", "name"]).map_err(|e| io_err(vocab_path, e))?;
    for (i, (ns, name)) in matrix.vocabulary.entries().iter().enumerate() {
        w.write_record([i.to_string().as_str(), ns.as_str(), name]).map_err(|e| io_err(vocab_path, e))?;
    }
    w.flush().map_err(|e| io_err(vocab_path, e))?;

    let mut w = csv::Writer::from_path(rows_path).map_err(|e| io_err(rows_path, e))?;
    w.write_record(["commit_id", "features", "label", "timestamp"]).map_err(|e| io_err(rows_path, e))?;
    for i in 0..matrix.n_rows() {
        let features = matrix.rows[i].iter().map(|(c, v)| format!("{c}:{v}")).collect::<Vec<_>>().join(";");
        let ts = matrix.timestamps[i].map(|t| t.to_string()).unwrap_or_default();
        w.write_record([matrix.commit_ids[i].as_str(), &features, &matrix.labels[i].to_string(), &ts])
            .map_err(|e| io_err(rows_path, e))?;
    }
    w.flush().map_err(|e| io_err(rows_path, e))
}

pub fn read_sidecar(vocab_path: &Path, rows_path: &Path) -> Result<FeatureMatrix, FeaturizeError> {
    let bad = |msg: String| FeaturizeError::Sidecar(msg);
    let mut r = csv::Reader::from_path(vocab_path).map_err(|e| io_err(vocab_path, e))?;
    let mut entries = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(vocab_path, e))?;
        let index: usize = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad(format!("vocabulary row {i}")))?;
        if index != i {
            return Err(bad(format!("vocabulary index {index} at row {i}")));
        }
        let ns: Namespace = rec.get(1).unwrap_or("").parse()?;
        entries.push((ns, rec.get(2).unwrap_or("").to_string()));
    }
    let vocabulary = FeatureVocabulary::from_entries(entries.clone());
    if vocabulary.entries() != entries.as_slice() {
        return Err(bad("vocabulary is not sorted and duplicate-free".into()));
    }

    let mut r = csv::Reader::from_path(rows_path).map_err(|e| io_err(rows_path, e))?;
    let mut matrix = FeatureMatrix {
        vocabulary,
        commit_ids: Vec::new(),
        rows: Vec::new(),
        labels: Vec::new(),
        timestamps: Vec::new(),
    };
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(rows_path, e))?;
        let mut pairs = Vec::new();
        for pair in rec.get(1).unwrap_or("").split(';').filter(|s| !s.is_empty()) {
            let (c, v) = pair.split_once(':').ok_or_else(|| bad(format!("row {i}: `{pair}`")))?;
            let c: u32 = c.parse().map_err(|_| bad(format!("row {i}: column `{c}`")))?;
            let v: f64 = v.parse().map_err(|_| bad(format!("row {i}: value `{v}`")))?;
            if c as usize >= matrix.n_cols() {
                return Err(bad(format!("row {i}: column {c} out of range")));
            }
            pairs.push((c, v));
        }
        let label = match rec.get(2) {
            Some("0") => 0,
            Some("1") => 1,
            other => return Err(bad(format!("row {i}: label {other:?}"))),
        };
        let ts = match rec.get(3).unwrap_or("") {
            "" => None,
            s => Some(s.parse().map_err(|_| bad(format!("row {i}: timestamp `{s}`")))?),
        };
        matrix.commit_ids.push(rec.get(0).unwrap_or("").to_string());
        matrix.rows.push(SparseRow::from_pairs(pairs));
        matrix.labels.push(label);
        matrix.timestamps.push(ts);
    }
    Ok(matrix)
}
