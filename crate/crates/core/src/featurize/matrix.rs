use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{CommitFeatures, FeatureVocabulary, FeaturizeError, Multiset, Namespace};
use crate::corpus::{Dataset, Label};

/// Nonzero entries of one row, sorted by column.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseRow {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseRow {
    /// Builds a row from unsorted entries, dropping zeros.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let (indices, values) = pairs.into_iter().filter(|p| p.1 != 0.0).unzip();
        Self { indices, values }
    }

    pub fn get(&self, col: usize) -> f64 {
        match self.indices.binary_search(&(col as u32)) {
            Ok(i) => self.values[i],
            Err(_) => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().zip(&self.values).map(|(&i, &v)| (i as usize, v))
    }

    pub fn to_dense(&self, n_cols: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_cols];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub vocabulary: FeatureVocabulary,
    pub commit_ids: Vec<String>,
    pub rows: Vec<SparseRow>,
    pub labels: Vec<Label>,
    pub timestamps: Vec<Option<i64>>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.rows[row].get(col)
    }

    pub fn dense_rows(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.to_dense(self.n_cols())).collect()
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(col)).collect()
    }

    /// Keeps the given columns (sorted, deduplicated) and renumbers them.
    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        let keep: BTreeSet<usize> = cols.iter().copied().collect();
        let keep: Vec<usize> = keep.into_iter().collect();
        let mut remap = vec![u32::MAX; self.n_cols()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new as u32;
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let (indices, values) =
                    r.iter().filter(|(i, _)| remap[*i] != u32::MAX).map(|(i, v)| (remap[i], v)).unzip();
                SparseRow { indices, values }
            })
            .collect();
        FeatureMatrix {
            vocabulary: self.vocabulary.restrict(&keep),
            commit_ids: self.commit_ids.clone(),
            rows,
            labels: self.labels.clone(),
            timestamps: self.timestamps.clone(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            vocabulary: self.vocabulary.clone(),
            commit_ids: rows.iter().map(|&r| self.commit_ids[r].clone()).collect(),
            rows: rows.iter().map(|&r| self.rows[r].clone()).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            timestamps: rows.iter().map(|&r| self.timestamps[r]).collect(),
        }
    }
}

/// Out-of-vocabulary accounting for an encoding pass.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeDiagnostics {
    pub rows: usize,
    pub rows_with_oov: usize,
    pub all_zero_rows: usize,
    pub oov_occurrences: BTreeMap<Namespace, u64>,
    pub oov_distinct: BTreeMap<Namespace, usize>,
}

fn encode_counts(
    ns: Namespace,
    m: &Multiset,
    vocab: &FeatureVocabulary,
    pairs: &mut Vec<(u32, f64)>,
    oov: &mut BTreeMap<Namespace, BTreeMap<String, u64>>,
) {
    for (name, &count) in &m.counts {
        match vocab.index_of(ns, name) {
            Some(col) => pairs.push((col as u32, f64::from(count))),
            None => *oov.entry(ns).or_default().entry(name.clone()).or_default() += u64::from(count),
        }
    }
}

fn encode_inner(
    f: &CommitFeatures,
    vocab: &FeatureVocabulary,
    oov: &mut BTreeMap<Namespace, BTreeMap<String, u64>>,
) -> SparseRow {
    let mut pairs = Vec::new();
    if vocab.count_in(Namespace::Gs) > 0 {
        if let Some(gs) = &f.gs {
            for (name, &v) in gs {
                if let Some(col) = vocab.index_of(Namespace::Gs, name) {
                    pairs.push((col as u32, v));
                }
            }
        }
    }
    if vocab.count_in(Namespace::Ts) > 0 {
        encode_counts(Namespace::Ts, &f.ts, vocab, &mut pairs, oov);
    }
    if vocab.count_in(Namespace::Tp) > 0 {
        encode_counts(Namespace::Tp, &f.tp, vocab, &mut pairs, oov);
    }
    SparseRow::from_pairs(pairs)
}

/// Counts for ts/tp columns, metric values for gs columns. Names missing from
/// the vocabulary are dropped.
pub fn encode(features: &CommitFeatures, vocab: &FeatureVocabulary) -> SparseRow {
    encode_inner(features, vocab, &mut BTreeMap::new())
}

/// Encodes `features` (aligned with `dataset.records`) into a matrix.
pub fn assemble_matrix(
    dataset: &Dataset,
    features: &[CommitFeatures],
    vocab: &FeatureVocabulary,
) -> Result<(FeatureMatrix, EncodeDiagnostics), FeaturizeError> {
    let gs_cols: Vec<&str> =
        vocab.entries().iter().filter(|(ns, _)| *ns == Namespace::Gs).map(|(_, n)| n.as_str()).collect();
    let mut diag = EncodeDiagnostics::default();
    let mut oov_names: BTreeMap<Namespace, BTreeMap<String, u64>> = BTreeMap::new();
    let mut rows = Vec::with_capacity(features.len());
    if dataset.records.len() != features.len() {
        return Err(FeaturizeError::Misaligned {
            expected: format!("{} records", dataset.records.len()),
            found: format!("{} feature rows", features.len()),
        });
    }
    for (record, f) in dataset.records.iter().zip(features) {
        if record.commit_id != f.commit_id {
            return Err(FeaturizeError::Misaligned { expected: record.commit_id.clone(), found: f.commit_id.clone() });
        }
        for metric in &gs_cols {
            if !f.gs.as_ref().is_some_and(|g| g.contains_key(*metric)) {
                return Err(FeaturizeError::MissingMetric {
                    commit_id: f.commit_id.clone(),
                    metric: metric.to_string(),
                });
            }
        }
        let mut row_oov = BTreeMap::new();
        let row = encode_inner(f, vocab, &mut row_oov);
        if !row_oov.is_empty() {
            diag.rows_with_oov += 1;
        }
        if row.nnz() == 0 {
            diag.all_zero_rows += 1;
        }
        for (ns, names) in row_oov {
            let entry = oov_names.entry(ns).or_default();
            for (name, c) in names {
                *diag.oov_occurrences.entry(ns).or_default() += c;
                *entry.entry(name).or_default() += c;
            }
        }
        rows.push(row);
    }
    diag.rows = rows.len();
    diag.oov_distinct = oov_names.into_iter().map(|(ns, m)| (ns, m.len())).collect();
    let matrix = FeatureMatrix {
        vocabulary: vocab.clone(),
        commit_ids: dataset.records.iter().map(|r| r.commit_id.clone()).collect(),
        rows,
        labels: dataset.labels(),
        timestamps: dataset.records.iter().map(|r| r.timestamp).collect(),
    };
    Ok((matrix, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CommitRecord, SourceKind};
    use crate::featurize::{build_vocabulary, FeatureCombo};

    fn five_commit_fixture() -> (Dataset, Vec<CommitFeatures>) {
        let rows: [(&str, &[&str], u8); 5] = [
            ("0001", &["TP1", "TP2", "TP3", "TP3", "TP4", "TP4"], 0),
            ("0002", &["TP2", "TP4", "TP5"], 1),
            ("0003", &["TP1", "TP3", "TP6"], 0),
            ("0004", &["TP4", "TP4", "TP4"], 0),
            ("0005", &["TP4", "TP6", "TP7", "TP7"], 1),
        ];
        let records = rows
            .iter()
            .map(|(id, _, l)| CommitRecord {
                commit_id: id.to_string(),
                project: "demo".into(),
                timestamp: Some(1),
                label: *l,
                patch_text: String::new(),
                gs_row: None,
            })
            .collect();
        let features = rows
            .iter()
            .map(|(id, tp, _)| CommitFeatures {
                commit_id: id.to_string(),
                tp: tp.iter().copied().collect(),
                leaf_count: tp.len() as u64,
                ..Default::default()
            })
            .collect();
        (Dataset { project: "demo".into(), source_kind: SourceKind::Manual, records }, features)
    }

    #[test]
    fn five_commit_golden_encoding() {
        let (ds, feats) = five_commit_fixture();
        let vocab = build_vocabulary(&feats, FeatureCombo::TP).unwrap();
        let (m, diag) = assemble_matrix(&ds, &feats, &vocab).unwrap();
        let expect = [
            [1., 1., 2., 2., 0., 0., 0.],
            [0., 1., 0., 1., 1., 0., 0.],
            [1., 0., 1., 0., 0., 1., 0.],
            [0., 0., 0., 3., 0., 0., 0.],
            [0., 0., 0., 1., 0., 1., 2.],
        ];
        assert_eq!(m.n_cols(), 7);
        for (row, want) in m.dense_rows().iter().zip(expect) {
            assert_eq!(row.as_slice(), want.as_slice());
        }
        assert_eq!(m.labels, vec![0, 1, 0, 0, 1]);
        assert_eq!(diag.rows_with_oov, 0);
        for (row, f) in m.rows.iter().zip(&feats) {
            assert_eq!(row.sum() as u64, f.leaf_count);
        }
    }

    #[test]
    fn unseen_patterns_give_zero_row() {
        let (ds, feats) = five_commit_fixture();
        let vocab = build_vocabulary(&feats[..4], FeatureCombo::TP).unwrap();
        let unseen = CommitFeatures { commit_id: "x".into(), tp: ["TP9"].into_iter().collect(), ..Default::default() };
        assert_eq!(encode(&unseen, &vocab).nnz(), 0);
        let (m, diag) = assemble_matrix(&ds, &feats, &vocab).unwrap();
        assert_eq!(m.dense_rows()[4], vec![0., 0., 0., 1., 0., 1.]);
        assert_eq!(diag.rows_with_oov, 1);
        assert_eq!(diag.oov_occurrences[&Namespace::Tp], 2);
        assert_eq!(diag.oov_distinct[&Namespace::Tp], 1);
    }

    #[test]
    fn permutation_invariance() {
        let (ds, feats) = five_commit_fixture();
        let vocab = build_vocabulary(&feats, FeatureCombo::TP).unwrap();
        let mut rev = feats.clone();
        rev.reverse();
        assert_eq!(build_vocabulary(&rev, FeatureCombo::TP).unwrap(), vocab);
        let (a, _) = assemble_matrix(&ds, &feats, &vocab).unwrap();
        let (b, _) = assemble_matrix(&ds, &feats, &vocab).unwrap();
        assert_eq!(a, b);
        for f in &feats {
            let row = encode(f, &vocab);
            let i = a.commit_ids.iter().position(|c| *c == f.commit_id).unwrap();
            assert_eq!(row, a.rows[i]);
        }
    }

    #[test]
    fn column_and_row_subsets() {
        let (ds, feats) = five_commit_fixture();
        let vocab = build_vocabulary(&feats, FeatureCombo::TP).unwrap();
        let (m, _) = assemble_matrix(&ds, &feats, &vocab).unwrap();
        let sub = m.select_columns(&[6, 3]);
        assert_eq!(sub.vocabulary.label(0), "tp:TP4");
        assert_eq!(sub.vocabulary.label(1), "tp:TP7");
        assert_eq!(sub.dense_rows()[4], vec![1., 2.]);
        let rows = m.select_rows(&[4, 0]);
        assert_eq!(rows.commit_ids, vec!["0005", "0001"]);
        assert_eq!(rows.labels, vec![1, 0]);
    }

    #[test]
    fn gs_requirements() {
        let (ds, mut feats) = five_commit_fixture();
        for f in &mut feats {
            f.gs = Some([("la".to_string(), 57.6), ("nf".to_string(), 0.0)].into_iter().collect());
        }
        let vocab = build_vocabulary(&feats, FeatureCombo::GS_TP).unwrap();
        let (m, _) = assemble_matrix(&ds, &feats, &vocab).unwrap();
        assert_eq!(m.n_cols(), 9);
        assert_eq!(m.get(0, 0), 57.6);
        feats[2].gs = None;
        assert!(matches!(assemble_matrix(&ds, &feats, &vocab), Err(FeaturizeError::MissingMetric { .. })));
        feats.swap(0, 1);
        assert!(matches!(assemble_matrix(&ds, &feats, &vocab), Err(FeaturizeError::Misaligned { .. })));
    }
}
