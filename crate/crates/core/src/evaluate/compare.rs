use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{wilcoxon_signed_rank, EvalError, EvalRow, StatTestResult};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;
pub const COMPARED_METRICS: [&str; 4] = ["precision", "recall", "f1", "auc"];
const COMBO_ORDER: [&str; 8] = ["GS-ALL", "GS", "TS", "TP", "GS+TS", "GS+TP", "TS+TP", "GS+TS+TP"];

/// Paired test of `combo_b - combo_a` over shared projects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub model: String,
    pub metric: String,
    pub combo_a: String,
    pub combo_b: String,
    pub projects: Vec<String>,
    pub differences: Vec<f64>,
    pub test: Option<StatTestResult>,
    pub note: Option<String>,
    /// The combo with the larger mean when the difference is significant.
    pub better: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub model: String,
    pub project: String,
    pub combo: String,
    pub f1: f64,
    pub f1_baseline: f64,
    /// `(f1 - f1_baseline) / f1_baseline`; absent when the baseline is 0.
    pub improvement: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline: String,
    pub significance_level: f64,
    pub pairs: Vec<PairTest>,
    pub improvements: Vec<Improvement>,
}

pub(crate) fn combo_sort_key(c: &str) -> (usize, String) {
    (COMBO_ORDER.iter().position(|x| *x == c).unwrap_or(COMBO_ORDER.len()), c.to_string())
}

/// Every pair of combos, per model and metric, plus the F1 improvement of
/// each combo over `baseline`.
pub fn compare_combos(rows: &[EvalRow], baseline: &str) -> Result<ComparisonReport, EvalError> {
    // model -> combo -> project -> row
    let mut grid: BTreeMap<&str, BTreeMap<&str, BTreeMap<&str, &EvalRow>>> = BTreeMap::new();
    for r in rows {
        grid.entry(&r.model).or_default().entry(&r.combo).or_default().insert(&r.project, r);
    }
    let mut report = ComparisonReport {
        baseline: baseline.to_string(),
        significance_level: SIGNIFICANCE_LEVEL,
        ..Default::default()
    };
    for (model, combos) in &grid {
        let mut names: Vec<&str> = combos.keys().copied().collect();
        names.sort_by_key(|c| combo_sort_key(c));
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                let pa: BTreeSet<&str> = combos[a].keys().copied().collect();
                let pb: BTreeSet<&str> = combos[b].keys().copied().collect();
                if pa != pb {
                    return Err(EvalError::UnpairedProjects { a: a.to_string(), b: b.to_string() });
                }
                let projects: Vec<String> = pa.iter().map(|p| p.to_string()).collect();
                for metric in COMPARED_METRICS {
                    report.pairs.push(pair_test(model, metric, a, b, &projects, &combos[a], &combos[b]));
                }
            }
        }
        if let Some(base) = combos.get(baseline) {
            for combo in names.iter().filter(|c| **c != baseline) {
                for (project, row) in &combos[combo] {
                    let Some(b) = base.get(project) else { continue };
                    report.improvements.push(Improvement {
                        model: model.to_string(),
                        project: project.to_string(),
                        combo: combo.to_string(),
                        f1: row.f1,
                        f1_baseline: b.f1,
                        improvement: (b.f1 > 0.0).then(|| (row.f1 - b.f1) / b.f1),
                    });
                }
            }
        }
    }
    Ok(report)
}

fn pair_test(
    model: &str,
    metric: &str,
    a: &str,
    b: &str,
    projects: &[String],
    rows_a: &BTreeMap<&str, &EvalRow>,
    rows_b: &BTreeMap<&str, &EvalRow>,
) -> PairTest {
    let mut out = PairTest {
        model: model.into(),
        metric: metric.into(),
        combo_a: a.into(),
        combo_b: b.into(),
        projects: projects.to_vec(),
        differences: Vec::new(),
        test: None,
        note: None,
        better: None,
    };
    let mut diffs = Vec::new();
    for p in projects {
        match (rows_a[p.as_str()].metric(metric), rows_b[p.as_str()].metric(metric)) {
            (Some(x), Some(y)) => diffs.push(y - x),
            _ => {
                out.note = Some(format!("{metric} undefined for {p}"));
                return out;
            }
        }
    }
    match wilcoxon_signed_rank(&diffs) {
        Ok(t) => {
            if t.p_value < SIGNIFICANCE_LEVEL {
                let sum: f64 = diffs.iter().sum();
                out.better = Some(if sum > 0.0 { b } else { a }.to_string());
            }
            out.test = Some(t);
        }
        Err(e) => out.note = Some(e.to_string()),
    }
    out.differences = diffs;
    out
}
