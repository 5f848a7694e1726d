use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{RankedFeatureList, SelectError};
use crate::evaluate::metrics;
use crate::featurize::SparseRow;
use crate::learn::{fit, ClassifierSpec, Design};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    F1,
    Precision,
    Recall,
}

impl Criterion {
    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::F1 => "f1",
            Criterion::Precision => "precision",
            Criterion::Recall => "recall",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(Criterion::F1),
            "precision" => Ok(Criterion::Precision),
            "recall" => Ok(Criterion::Recall),
            other => Err(format!("unknown selection criterion `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub column: usize,
    pub rank: usize,
    pub accepted: bool,
    /// Metric of the candidate set; absent when the candidate was skipped.
    pub score: Option<f64>,
    pub best: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub criterion: Criterion,
    /// Accepted columns in acceptance order.
    pub selected: Vec<usize>,
    pub score: f64,
    pub trace: Vec<TraceStep>,
}

impl SelectionResult {
    pub fn sorted_columns(&self) -> Vec<usize> {
        let mut c = self.selected.clone();
        c.sort_unstable();
        c
    }
}

struct Columns<'a> {
    design: &'a Design,
    rows: Vec<Vec<(u32, f64)>>,
}

impl<'a> Columns<'a> {
    fn new(design: &'a Design) -> Self {
        Self { design, rows: vec![Vec::new(); design.n_rows()] }
    }

    fn with(&self, col: usize, width: usize) -> Result<Design, SelectError> {
        let mut rows = self.rows.clone();
        let (r, v) = self.design.column(col);
        for (&r, &v) in r.iter().zip(v) {
            rows[r as usize].push((width as u32, v));
        }
        let rows: Vec<SparseRow> = rows.into_iter().map(SparseRow::from_pairs).collect();
        Ok(Design::new(&rows, width + 1)?)
    }

    fn push(&mut self, col: usize, width: usize) {
        let (r, v) = self.design.column(col);
        for (&r, &v) in r.iter().zip(v) {
            self.rows[r as usize].push((width as u32, v));
        }
    }
}

fn same_column(d: &Design, a: usize, b: usize) -> bool {
    d.column(a) == d.column(b)
}

fn score(
    spec: &ClassifierSpec,
    train: &Design,
    train_labels: &[u8],
    eval: &Design,
    eval_labels: &[u8],
    criterion: Criterion,
) -> Result<f64, SelectError> {
    let model = fit(spec, train, train_labels)?;
    let preds = model.predict(eval.rows(), eval.n_cols())?;
    let m = metrics(eval_labels, &preds, None)?;
    Ok(match criterion {
        Criterion::F1 => m.f1,
        Criterion::Precision => m.precision,
        Criterion::Recall => m.recall,
    })
}

/// Walks the ranking from rank 1 and keeps a feature only when it strictly
/// improves the criterion on the evaluation rows. A column identical to an
/// accepted one on both partitions is skipped without a fit.
pub fn greedy_forward_select(
    ranked: &RankedFeatureList,
    train: &Design,
    train_labels: &[u8],
    eval: &Design,
    eval_labels: &[u8],
    spec: &ClassifierSpec,
    criterion: Criterion,
) -> Result<SelectionResult, SelectError> {
    let n = train.n_cols();
    if n == 0 {
        return Err(SelectError::NoColumns);
    }
    if ranked.len() != n || eval.n_cols() != n {
        return Err(SelectError::RankMismatch { ranked: ranked.len(), columns: n });
    }
    let mut tr = Columns::new(train);
    let mut ev = Columns::new(eval);
    let mut selected: Vec<usize> = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut trace = Vec::with_capacity(n);
    for col in ranked.order() {
        let rank = ranked.ranks[col];
        if let Some(&twin) = selected.iter().find(|&&s| same_column(train, s, col) && same_column(eval, s, col)) {
            trace.push(TraceStep {
                column: col,
                rank,
                accepted: false,
                score: None,
                best,
                note: Some(format!("duplicate of column {twin}")),
            });
            continue;
        }
        let width = selected.len();
        let s = score(spec, &tr.with(col, width)?, train_labels, &ev.with(col, width)?, eval_labels, criterion)?;
        let accepted = s > best;
        if accepted {
            best = s;
            tr.push(col, width);
            ev.push(col, width);
            selected.push(col);
        }
        trace.push(TraceStep { column: col, rank, accepted, score: Some(s), best, note: None });
    }
    Ok(SelectionResult { criterion, selected, score: best, trace })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::learn::ModelKind;

    fn data(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..1.0);
                vec![a, rng.gen_range(0.0..1.0), a, rng.gen_range(0.0..1.0)]
            })
            .collect();
        let y = x.iter().map(|r| u8::from(r[0] > 0.5)).collect();
        (x, y)
    }

    #[test]
    fn duplicate_never_accepted_and_scores_non_decreasing() {
        let (x, y) = data(4, 160);
        let tr = Design::from_dense(&x[..110]).unwrap();
        let ev = Design::from_dense(&x[110..]).unwrap();
        let ranked = RankedFeatureList { ranks: vec![1, 3, 2, 4] };
        let spec = ClassifierSpec::new(ModelKind::Rf, 0);
        let r = greedy_forward_select(&ranked, &tr, &y[..110], &ev, &y[110..], &spec, Criterion::F1).unwrap();
        assert_eq!(r.selected[0], 0);
        assert!(!r.selected.contains(&2));
        let dup = r.trace.iter().find(|t| t.column == 2).unwrap();
        assert!(!dup.accepted && dup.score.is_none());
        let accepted: Vec<f64> = r.trace.iter().filter(|t| t.accepted).map(|t| t.score.unwrap()).collect();
        assert!(accepted.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(r.trace.len(), 4);
        assert_eq!(r.score, *accepted.last().unwrap());
    }

    #[test]
    fn first_ranked_always_accepted() {
        let (x, y) = data(5, 80);
        let tr = Design::from_dense(&x[..50]).unwrap();
        let ev = Design::from_dense(&x[50..]).unwrap();
        let ranked = RankedFeatureList { ranks: vec![4, 1, 3, 2] };
        let spec = ClassifierSpec::new(ModelKind::Knn, 0);
        let r = greedy_forward_select(&ranked, &tr, &y[..50], &ev, &y[50..], &spec, Criterion::Recall).unwrap();
        assert_eq!(r.selected[0], 1);
        assert!(r.trace[0].accepted);
    }

    #[test]
    fn criterion_parses() {
        assert_eq!("F1".parse::<Criterion>().unwrap(), Criterion::F1);
        assert!("auc".parse::<Criterion>().is_err());
    }
}
