use std::fmt::Write as _;
use std::path::Path;

use super::compare::combo_sort_key;
use super::{box_plot_svg, improvement_svg, ComparisonReport, EvalError, EvalRow};

const MODEL_ORDER: [&str; 4] = ["rf", "knn", "gbc", "pct"];

fn io(path: &Path, e: impl ToString) -> EvalError {
    EvalError::Io { path: path.to_path_buf(), detail: e.to_string() }
}

fn model_key(m: &str) -> (usize, String) {
    (MODEL_ORDER.iter().position(|x| *x == m).unwrap_or(MODEL_ORDER.len()), m.to_string())
}

pub(crate) fn sorted_rows(rows: &[EvalRow]) -> Vec<&EvalRow> {
    let mut v: Vec<&EvalRow> = rows.iter().collect();
    v.sort_by(|a, b| {
        (&a.project, combo_sort_key(&a.combo), model_key(&a.model)).cmp(&(
            &b.project,
            combo_sort_key(&b.combo),
            model_key(&b.model),
        ))
    });
    v
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

pub fn write_results_csv(rows: &[EvalRow], path: &Path) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io(path, e))?;
    w.write_record([
        "project",
        "combo",
        "model",
        "n_features",
        "precision",
        "recall",
        "f1",
        "auc",
        "tp",
        "fp",
        "tn",
        "fn",
        "flags",
    ])
    .map_err(|e| io(path, e))?;
    for r in sorted_rows(rows) {
        w.write_record([
            r.project.clone(),
            r.combo.clone(),
            r.model.clone(),
            r.n_features.to_string(),
            fmt(r.precision),
            fmt(r.recall),
            fmt(r.f1),
            r.auc.map(fmt).unwrap_or_default(),
            r.tp.to_string(),
            r.fp.to_string(),
            r.tn.to_string(),
            r.fn_.to_string(),
            r.flags.clone(),
        ])
        .map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<EvalRow>, EvalError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io(path, e))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io(path, e))?;
        let f = |i: usize| rec.get(i).unwrap_or("").to_string();
        let num = |i: usize| f(i).parse::<f64>().map_err(|e| io(path, e));
        let int = |i: usize| f(i).parse::<usize>().map_err(|e| io(path, e));
        out.push(EvalRow {
            project: f(0),
            combo: f(1),
            model: f(2),
            n_features: int(3)?,
            precision: num(4)?,
            recall: num(5)?,
            f1: num(6)?,
            auc: if f(7).is_empty() { None } else { Some(num(7)?) },
            tp: int(8)?,
            fp: int(9)?,
            tn: int(10)?,
            fn_: int(11)?,
            flags: f(12),
        });
    }
    Ok(out)
}

pub fn comparison_markdown(rows: &[EvalRow], report: &ComparisonReport) -> String {
    let sorted = sorted_rows(rows);
    let mut models: Vec<&str> = sorted.iter().map(|r| r.model.as_str()).collect();
    models.sort_by_key(|m| model_key(m));
    models.dedup();
    let mut out = String::from("# Feature combination comparison\n");
    for model in &models {
        let _ = write!(out, "\n## {model}\n");
        let mut combos: Vec<&str> = sorted.iter().filter(|r| r.model == *model).map(|r| r.combo.as_str()).collect();
        combos.sort_by_key(|c| combo_sort_key(c));
        combos.dedup();
        for combo in &combos {
            let _ = write!(out, "\n### {combo}\n\n| Project | Features | Precision | Recall | F1 | AUC |\n|---|---:|---:|---:|---:|---:|\n");
            for r in sorted.iter().filter(|r| r.model == *model && r.combo == *combo) {
                let auc = r.auc.map(|a| format!("{a:.2}")).unwrap_or_else(|| "n/a".into());
                let _ = writeln!(
                    out,
                    "| {} | {} | {:.2} | {:.2} | {:.2} | {} |",
                    r.project, r.n_features, r.precision, r.recall, r.f1, auc
                );
            }
        }

        let imps: Vec<_> = report.improvements.iter().filter(|i| i.model == *model).collect();
        if !imps.is_empty() {
            let _ = write!(out, "\n### F1 change relative to {}\n\n| Project | Combo | F1 | Baseline F1 | Change |\n|---|---|---:|---:|---:|\n", report.baseline);
            for i in imps {
                let change = i.improvement.map(|v| format!("{:+.1}%", v * 100.0)).unwrap_or_else(|| "n/a".into());
                let _ =
                    writeln!(out, "| {} | {} | {:.2} | {:.2} | {} |", i.project, i.combo, i.f1, i.f1_baseline, change);
            }
        }

        let _ = write!(
            out,
            "\n### Signed-rank tests (two-sided, alpha = {})\n\n| Metric | A | B | n | W | p | Better |\n|---|---|---|---:|---:|---:|---|\n",
            report.significance_level
        );
        for p in report.pairs.iter().filter(|p| p.model == *model) {
            match &p.test {
                Some(t) => {
                    let _ = writeln!(
                        out,
                        "| {} | {} | {} | {} | {} | {:.5} ({}) | {} |",
                        p.metric,
                        p.combo_a,
                        p.combo_b,
                        t.n,
                        t.statistic,
                        t.p_value,
                        t.method,
                        p.better.as_deref().unwrap_or("")
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        "| {} | {} | {} | {} | | {} | |",
                        p.metric,
                        p.combo_a,
                        p.combo_b,
                        p.projects.len(),
                        p.note.as_deref().unwrap_or("")
                    );
                }
            }
        }
    }
    out
}

/// Writes results.csv, significance.json, comparison.md and SVG charts.
pub fn write_reports(dir: &Path, rows: &[EvalRow], report: &ComparisonReport) -> Result<(), EvalError> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    write_results_csv(rows, &dir.join("results.csv"))?;
    let sig = serde_json::to_string_pretty(report).map_err(|e| io(dir, e))?;
    let write = |name: &str, text: &str| std::fs::write(dir.join(name), text).map_err(|e| io(&dir.join(name), e));
    write("significance.json", &sig)?;
    write("comparison.md", &comparison_markdown(rows, report))?;
    let mut models: Vec<&str> = rows.iter().map(|r| r.model.as_str()).collect();
    models.sort_by_key(|m| model_key(m));
    models.dedup();
    for model in models {
        if report.improvements.iter().any(|i| i.model == model) {
            write(&format!("f1_change_{model}.svg"), &improvement_svg(report, model))?;
        }
        for metric in ["precision", "recall", "f1", "auc"] {
            write(&format!("{metric}_{model}.svg"), &box_plot_svg(rows, model, metric))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::{compare_combos, metrics};

    fn rows() -> Vec<EvalRow> {
        let m = metrics(&[1, 1, 0, 0], &[1, 0, 0, 1], Some(&[0.9, 0.4, 0.2, 0.6])).unwrap();
        let mut out = Vec::new();
        for project in ["b", "a", "c"] {
            for combo in ["TP", "GS", "GS+TP"] {
                let mut r = EvalRow::new(project, combo, "rf", 4, &m);
                r.f1 += project.len() as f64 * 0.01 + combo.len() as f64 * 0.02;
                out.push(r);
            }
        }
        out
    }

    #[test]
    fn csv_round_trip_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        write_results_csv(&rows(), &path).unwrap();
        let back = read_results_csv(&path).unwrap();
        let keys: Vec<(String, String)> = back.iter().map(|r| (r.project.clone(), r.combo.clone())).collect();
        assert_eq!(keys[0], ("a".to_string(), "GS".to_string()));
        assert_eq!(keys[1], ("a".to_string(), "TP".to_string()));
        assert_eq!(keys[2], ("a".to_string(), "GS+TP".to_string()));
        assert_eq!(back[0].auc, Some(0.75));
        assert_eq!(back[0].tp, 1);
    }

    #[test]
    fn writes_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let rows = rows();
        let report = compare_combos(&rows, "GS").unwrap();
        write_reports(dir.path(), &rows, &report).unwrap();
        for f in ["results.csv", "significance.json", "comparison.md", "f1_change_rf.svg", "auc_rf.svg"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let md = std::fs::read_to_string(dir.path().join("comparison.md")).unwrap();
        assert!(md.contains("### GS+TP"));
        assert!(md.contains("| a | 4 | 0.50 | 0.50 |"));
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("significance.json")).unwrap()).unwrap();
        assert_eq!(json["baseline"], "GS");
    }
}
