use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SelectError;
use crate::featurize::{FeatureVocabulary, SparseRow};
use crate::learn::{fit, ClassifierSpec, Design, LearnError};

/// Rank of every column; 1 is the most important.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedFeatureList {
    pub ranks: Vec<usize>,
}

impl RankedFeatureList {
    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Columns from rank 1 to rank n.
    pub fn order(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = (0..self.ranks.len()).collect();
        cols.sort_by_key(|&c| self.ranks[c]);
        cols
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.ranks.len()];
        for &r in &self.ranks {
            if r == 0 || r > seen.len() || seen[r - 1] {
                return false;
            }
            seen[r - 1] = true;
        }
        true
    }
}

/// Geometric elimination down to `refine_from` columns, then one at a time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarseSchedule {
    pub fraction: f64,
    pub refine_from: usize,
}

impl Default for CoarseSchedule {
    fn default() -> Self {
        Self { fraction: 0.1, refine_from: 100 }
    }
}

pub(crate) fn column_subset(design: &Design, cols: &[usize]) -> Result<Design, LearnError> {
    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); design.n_rows()];
    for (new, &c) in cols.iter().enumerate() {
        let (r, v) = design.column(c);
        for (&r, &v) in r.iter().zip(v) {
            rows[r as usize].push((new as u32, v));
        }
    }
    let rows: Vec<SparseRow> = rows.into_iter().map(SparseRow::from_pairs).collect();
    Design::new(&rows, cols.len())
}

/// Refits `estimator` on the surviving columns and drops the `step` weakest
/// each round until one column remains. Within a round the lower importance
/// gets the worse rank; equal importances fall to the lower column first.
pub fn rfe_rank(
    design: &Design,
    labels: &[u8],
    estimator: &ClassifierSpec,
    step: usize,
    coarse: Option<CoarseSchedule>,
) -> Result<RankedFeatureList, SelectError> {
    let n = design.n_cols();
    if n == 0 {
        return Err(SelectError::NoColumns);
    }
    if !estimator.kind().has_importances() {
        return Err(LearnError::EstimatorWithoutImportances(estimator.kind()).into());
    }
    let step = step.max(1);
    let mut ranks = vec![0usize; n];
    let mut surviving: Vec<usize> = (0..n).collect();
    let mut next_rank = n;
    while surviving.len() > 1 {
        let sub = column_subset(design, &surviving)?;
        let model = fit(estimator, &sub, labels)?;
        let imp = model.importances()?;
        let mut order: Vec<usize> = (0..surviving.len()).collect();
        order.sort_by(|&a, &b| imp[a].total_cmp(&imp[b]).then(surviving[a].cmp(&surviving[b])));
        let mut drop = step;
        if let Some(c) = coarse {
            if surviving.len() > c.refine_from {
                let geometric = (surviving.len() as f64 * c.fraction).ceil() as usize;
                drop = geometric.max(step).min(surviving.len() - c.refine_from);
            }
        }
        let drop = drop.min(surviving.len() - 1);
        for &i in &order[..drop] {
            ranks[surviving[i]] = next_rank;
            next_rank -= 1;
        }
        let dropped: std::collections::HashSet<usize> = order[..drop].iter().map(|&i| surviving[i]).collect();
        surviving.retain(|c| !dropped.contains(c));
    }
    ranks[surviving[0]] = 1;
    if n == 1 {
        // one column ranks first without any fit, but labels must still be usable
        fit(estimator, design, labels)?;
    }
    let out = RankedFeatureList { ranks };
    assert!(out.is_permutation(), "elimination produced a non-permutation ranking");
    Ok(out)
}

pub fn write_rank_csv(ranked: &RankedFeatureList, vocab: &FeatureVocabulary, path: &Path) -> Result<(), SelectError> {
    let io = |e: csv::Error| SelectError::Io { path: path.to_path_buf(), detail: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["index", "namespace", "name", "rank"]).map_err(io)?;
    for c in ranked.order() {
        let (ns, name) = vocab.entry(c);
        w.write_record([c.to_string().as_str(), ns.as_str(), name, &ranked.ranks[c].to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| SelectError::Io { path: path.to_path_buf(), detail: e.to_string() })
}

pub fn read_rank_csv(path: &Path, n_cols: usize) -> Result<RankedFeatureList, SelectError> {
    let bad = |detail: String| SelectError::Io { path: path.to_path_buf(), detail };
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut ranks = vec![0usize; n_cols];
    let mut seen = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let idx: usize = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad index".into()))?;
        let rank: usize = rec.get(3).and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad rank".into()))?;
        if idx >= n_cols {
            return Err(SelectError::RankMismatch { ranked: idx + 1, columns: n_cols });
        }
        ranks[idx] = rank;
        seen += 1;
    }
    let out = RankedFeatureList { ranks };
    if seen != n_cols || !out.is_permutation() {
        return Err(SelectError::RankMismatch { ranked: seen, columns: n_cols });
    }
    Ok(out)
}
