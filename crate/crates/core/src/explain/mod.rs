//! Local rule explanations for individual predictions.
//!
//! A neighbourhood is sampled by interpolating between the instance and its
//! nearest training rows of each predicted class, labelled by the model, and
//! fitted with a shallow decision tree. The instance's path through that
//! tree becomes a list of feature-range conditions.

mod aggregate;

pub use aggregate::{aggregate_conditions, conditions_markdown, AggregatedCondition};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::featurize::{FeatureMatrix, Namespace, SparseRow};
use crate::learn::{build_tree, threshold, Criterion, Design, LearnError, Sample, TrainedModel, TreeParams};
use crate::seed;

#[derive(Debug, thiserror::Error)]
pub enum ExplainError {
    #[error("training matrix is empty")]
    EmptyTraining,
    #[error("model expects {expected} features, matrix has {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("surrogate produced no condition for {0}: the neighbourhood has a single label")]
    NoRules(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("{path}: {detail}")]
    Io { path: std::path::PathBuf, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    SupportsBuggy,
    SupportsClean,
}

mod bound {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn lower<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }

    pub fn upper<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// `lower < value <= upper`; an open side is infinite and written as null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleCondition {
    pub namespace: Namespace,
    pub name: String,
    #[serde(serialize_with = "bound::serialize", deserialize_with = "bound::lower")]
    pub lower: f64,
    #[serde(serialize_with = "bound::serialize", deserialize_with = "bound::upper")]
    pub upper: f64,
    pub direction: Direction,
}

impl RuleCondition {
    pub fn holds(&self, value: f64) -> bool {
        self.lower < value && value <= self.upper
    }
}

pub(crate) fn format_range(lower: f64, name: &str, upper: f64) -> String {
    match (lower.is_finite(), upper.is_finite()) {
        (true, true) => format!("{lower:.2} < {name} <= {upper:.2}"),
        (true, false) => format!("{name} > {lower:.2}"),
        (false, true) => format!("{name} <= {upper:.2}"),
        (false, false) => name.to_string(),
    }
}

impl fmt::Display for RuleCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_range(self.lower, &self.name, self.upper))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub commit_id: String,
    pub prediction: u8,
    pub probability: f64,
    pub rules: Vec<RuleCondition>,
    pub fidelity: f64,
    pub low_fidelity: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplainOptions {
    pub n_synthetic: usize,
    /// Nearest training rows taken from each predicted class.
    pub neighbors: usize,
    pub max_depth: usize,
    pub fidelity_floor: f64,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        Self { n_synthetic: 500, neighbors: 10, max_depth: 3, fidelity_floor: 0.8 }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Explains one row of the model's feature space. `training` supplies the
/// neighbourhood anchors and the feature names.
pub fn explain_instance(
    model: &TrainedModel,
    commit_id: &str,
    instance: &SparseRow,
    training: &FeatureMatrix,
    opts: &ExplainOptions,
    seed_value: u64,
) -> Result<Explanation, ExplainError> {
    if training.n_rows() == 0 {
        return Err(ExplainError::EmptyTraining);
    }
    let n_cols = training.n_cols();
    if model.n_features != n_cols {
        return Err(ExplainError::ShapeMismatch { expected: model.n_features, found: n_cols });
    }
    let x = instance.to_dense(n_cols);
    let probability = model.proba_row(instance);
    let prediction = threshold(probability);
    let direction = if prediction == 1 { Direction::SupportsBuggy } else { Direction::SupportsClean };

    let train_rows = training.dense_rows();
    let train_pred: Vec<u8> = model.predict_proba_dense(&train_rows)?.into_iter().map(threshold).collect();
    let mut anchors: Vec<usize> = Vec::new();
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..train_rows.len()).filter(|&i| train_pred[i] == class).collect();
        idx.sort_by(|&a, &b| sq_dist(&train_rows[a], &x).total_cmp(&sq_dist(&train_rows[b], &x)).then(a.cmp(&b)));
        anchors.extend(idx.into_iter().take(opts.neighbors.max(1)));
    }

    let counted: Vec<bool> = (0..n_cols).map(|c| training.vocabulary.namespace(c).is_count()).collect();
    let mut rng = seed::rng(seed_value, &["explain", commit_id]);
    let mut hood: Vec<Vec<f64>> = Vec::with_capacity(opts.n_synthetic + anchors.len() + 1);
    hood.push(x.clone());
    hood.extend(anchors.iter().map(|&i| train_rows[i].clone()));
    for _ in 0..opts.n_synthetic {
        let anchor = &train_rows[anchors[rng.gen_range(0..anchors.len())]];
        let row = (0..n_cols)
            .map(|c| {
                let v = x[c] + rng.gen_range(0.0..=1.0) * (anchor[c] - x[c]);
                if counted[c] {
                    v.round()
                } else {
                    v
                }
            })
            .collect();
        hood.push(row);
    }
    let labels: Vec<u8> = model.predict_proba_dense(&hood)?.into_iter().map(threshold).collect();

    let design = Design::from_dense(&hood)?;
    let samples =
        (0..hood.len()).map(|i| Sample { row: i as u32, weight: 1.0, target: f64::from(labels[i]) }).collect();
    let params =
        TreeParams { criterion: Criterion::Gini, max_depth: Some(opts.max_depth), min_leaf: 1, max_features: None };
    let (surrogate, _) = build_tree(&design, samples, params, None);
    let agree = hood.iter().zip(&labels).filter(|(row, &l)| threshold(surrogate.predict_dense(row)) == l).count();
    let fidelity = agree as f64 / hood.len() as f64;

    let mut bounds: Vec<(usize, f64, f64)> = Vec::new();
    for step in surrogate.decision_path_dense(&x) {
        let pos = match bounds.iter().position(|b| b.0 == step.feature) {
            Some(p) => p,
            None => {
                bounds.push((step.feature, f64::NEG_INFINITY, f64::INFINITY));
                bounds.len() - 1
            }
        };
        let b = &mut bounds[pos];
        if step.went_left {
            b.2 = b.2.min(step.threshold);
        } else {
            b.1 = b.1.max(step.threshold);
        }
    }
    if bounds.is_empty() {
        return Err(ExplainError::NoRules(commit_id.to_string()));
    }
    let rules = bounds
        .into_iter()
        .map(|(c, lower, upper)| {
            let (namespace, name) = training.vocabulary.entry(c);
            RuleCondition { namespace, name: name.to_string(), lower, upper, direction }
        })
        .collect();
    Ok(Explanation {
        commit_id: commit_id.to_string(),
        prediction,
        probability,
        rules,
        fidelity,
        low_fidelity: fidelity < opts.fidelity_floor,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExplainReport {
    pub explanations: BTreeMap<String, Explanation>,
    /// Commits that could not be explained, with the reason.
    pub skipped: BTreeMap<String, String>,
}

/// Explains every test row the model predicts buggy.
pub fn explain_predicted_buggy(
    model: &TrainedModel,
    test: &FeatureMatrix,
    training: &FeatureMatrix,
    opts: &ExplainOptions,
    seed_value: u64,
) -> Result<ExplainReport, ExplainError> {
    let preds = model.predict_matrix(test)?;
    let results: Vec<(String, Result<Explanation, ExplainError>)> = (0..test.n_rows())
        .into_par_iter()
        .filter(|&i| preds[i] == 1)
        .map(|i| {
            let id = test.commit_ids[i].clone();
            let e = explain_instance(model, &id, &test.rows[i], training, opts, seed_value);
            (id, e)
        })
        .collect();
    let mut report = ExplainReport::default();
    for (id, r) in results {
        match r {
            Ok(e) => {
                report.explanations.insert(id, e);
            }
            Err(ExplainError::NoRules(_)) => {
                report.skipped.insert(id, "neighbourhood has a single label".into());
            }
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

pub fn write_explain_json(report: &ExplainReport, path: &Path) -> Result<(), ExplainError> {
    let text = serde_json::to_string_pretty(report).expect("explanations serialize");
    std::fs::write(path, text).map_err(|e| ExplainError::Io { path: path.to_path_buf(), detail: e.to_string() })
}

pub fn read_explain_json(path: &Path) -> Result<ExplainReport, ExplainError> {
    let io = |detail: String| ExplainError::Io { path: path.to_path_buf(), detail };
    let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::FeatureVocabulary;
    use crate::learn::{fit, ClassifierSpec, ModelKind};

    fn matrix(rows: Vec<Vec<f64>>, labels: Vec<u8>, names: &[(Namespace, &str)]) -> FeatureMatrix {
        let n = rows.len();
        FeatureMatrix {
            vocabulary: FeatureVocabulary::from_entries(names.iter().map(|(ns, s)| (*ns, s.to_string()))),
            commit_ids: (0..n).map(|i| format!("{i:08x}")).collect(),
            rows: rows.iter().map(|r| crate::learn::dense_to_sparse(r)).collect(),
            labels,
            timestamps: vec![None; n],
        }
    }

    // f thresholded at 10, g is noise
    fn threshold_model() -> (TrainedModel, FeatureMatrix) {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![f64::from(i) * 0.5, f64::from(i % 7)]).collect();
        let labels: Vec<u8> = rows.iter().map(|r| u8::from(r[0] > 10.0)).collect();
        let m = matrix(rows, labels, &[(Namespace::Gs, "f"), (Namespace::Gs, "g")]);
        let mut spec = ClassifierSpec::new(ModelKind::Gbc, 0);
        spec.set("n_stages", "5").unwrap();
        spec.set("max_depth", "1").unwrap();
        let model = crate::learn::fit_matrix(&spec, &m).unwrap();
        (model, m)
    }

    #[test]
    fn recovers_single_threshold() {
        let (model, m) = threshold_model();
        let inst = crate::learn::dense_to_sparse(&[14.0, 3.0]);
        let e = explain_instance(&model, "abcd", &inst, &m, &ExplainOptions::default(), 7).unwrap();
        assert_eq!(e.prediction, 1);
        assert_eq!(e.rules.len(), 1);
        let r = &e.rules[0];
        assert_eq!(r.name, "f");
        assert!(r.holds(14.0));
        assert!((r.lower - 10.25).abs() < 0.5, "{r}");
        assert_eq!(r.direction, Direction::SupportsBuggy);
        assert!(e.fidelity > 0.95 && e.fidelity <= 1.0 && !e.low_fidelity);
    }

    #[test]
    fn clean_prediction_supports_clean_and_brackets_value() {
        let (model, m) = threshold_model();
        let inst = crate::learn::dense_to_sparse(&[3.0, 1.0]);
        let e = explain_instance(&model, "abcd", &inst, &m, &ExplainOptions::default(), 7).unwrap();
        assert_eq!(e.prediction, 0);
        assert!(e.rules.iter().all(|r| r.direction == Direction::SupportsClean));
        assert!(e.rules.iter().all(|r| r.holds(if r.name == "f" { 3.0 } else { 1.0 })));
    }

    #[test]
    fn deterministic_and_count_columns_stay_integral() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![f64::from(i % 5), f64::from(i % 3), f64::from(i / 7)]).collect();
        let labels: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + r[1] > 3.0)).collect();
        let m = matrix(rows, labels, &[(Namespace::Gs, "la"), (Namespace::Ts, "if"), (Namespace::Tp, "a-b")]);
        let model = fit(&ClassifierSpec::new(ModelKind::Rf, 1), &Design::new(&m.rows, 3).unwrap(), &m.labels).unwrap();
        let inst = m.rows[29].clone();
        let a = explain_instance(&model, "x", &inst, &m, &ExplainOptions::default(), 3).unwrap();
        let b = explain_instance(&model, "x", &inst, &m, &ExplainOptions::default(), 3).unwrap();
        assert_eq!(a, b);
        let dense = inst.to_dense(3);
        for r in &a.rules {
            let c = m.vocabulary.index_of(r.namespace, &r.name).unwrap();
            assert!(r.holds(dense[c]));
        }
    }

    #[test]
    fn json_uses_null_for_open_bounds() {
        let r = RuleCondition {
            namespace: Namespace::Tp,
            name: "decl-name".into(),
            lower: 1.84,
            upper: f64::INFINITY,
            direction: Direction::SupportsBuggy,
        };
        let j = serde_json::to_string(&r).unwrap();
        assert!(j.contains("\"upper\":null"));
        assert_eq!(serde_json::from_str::<RuleCondition>(&j).unwrap(), r);
        assert_eq!(r.to_string(), "decl-name > 1.84");
        let closed = RuleCondition { upper: 15.32, ..r };
        assert_eq!(closed.to_string(), "1.84 < decl-name <= 15.32");
    }
}
