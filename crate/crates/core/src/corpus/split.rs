use super::{CorpusError, Dataset};

/// Sorts by timestamp (commit id breaks ties) and puts the first
/// `ceil(fraction * n)` records in the training side.
pub fn split_time_ordered(dataset: &Dataset, train_fraction: f64) -> Result<(Dataset, Dataset), CorpusError> {
    let n = dataset.records.len();
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::EmptySplit { fraction: train_fraction, records: n });
    }
    let mut keyed = Vec::with_capacity(n);
    for record in &dataset.records {
        let ts = record.timestamp.ok_or_else(|| CorpusError::MissingTimestamp(record.commit_id.clone()))?;
        keyed.push((ts, record));
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.commit_id.cmp(&b.1.commit_id)));

    let n_train = (train_fraction * n as f64).ceil() as usize;
    if n_train == 0 || n_train >= n {
        return Err(CorpusError::EmptySplit { fraction: train_fraction, records: n });
    }
    let side = |range: &[(i64, &super::CommitRecord)]| Dataset {
        project: dataset.project.clone(),
        source_kind: dataset.source_kind,
        records: range.iter().map(|(_, r)| (*r).clone()).collect(),
    };
    Ok((side(&keyed[..n_train]), side(&keyed[n_train..])))
}
