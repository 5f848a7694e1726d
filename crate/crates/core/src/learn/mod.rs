//! Random forest, k-nearest neighbours, gradient boosting and perceptron
//! classifiers behind one deterministic interface.
//!
//! Probabilities are thresholded at 0.5 and a probability of exactly 0.5
//! predicts class 1.

mod design;
mod external;
mod forest;
mod gbc;
mod knn;
mod perceptron;
mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use design::{dense_to_sparse, Design};
pub use external::{align_external, load_external_predictions};
pub use forest::RandomForest;
pub use gbc::GradientBoosting;
pub use knn::{distance, Knn};
pub use perceptron::Perceptron;
pub use tree::{build_tree, Criterion, PathStep, Sample, Tree, TreeNode, TreeParams};

use crate::featurize::{FeatureMatrix, SparseRow};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("training labels hold a single class")]
    DegenerateLabels,
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("expected {expected} columns, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("{0} models expose no feature importances")]
    EstimatorWithoutImportances(ModelKind),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("{0} rows but {1} labels")]
    LabelCount(usize, usize),
    #[error("model file: {0}")]
    ModelFile(String),
    #[error("external predictions: {0}")]
    ExternalPredictions(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rf,
    Knn,
    Gbc,
    Pct,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Rf, ModelKind::Knn, ModelKind::Gbc, ModelKind::Pct];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rf => "rf",
            ModelKind::Knn => "knn",
            ModelKind::Gbc => "gbc",
            ModelKind::Pct => "pct",
        }
    }

    pub fn has_importances(self) -> bool {
        matches!(self, ModelKind::Rf | ModelKind::Gbc)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rf" | "random_forest" => Ok(ModelKind::Rf),
            "knn" => Ok(ModelKind::Knn),
            "gbc" | "gradient_boosting" => Ok(ModelKind::Gbc),
            "pct" | "perceptron" => Ok(ModelKind::Pct),
            other => Err(LearnError::InvalidHyperparameter(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
    Count(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    Euclidean,
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for RfParams {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: None, min_leaf: 1, max_features: MaxFeatures::Sqrt, bootstrap: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
    pub distance: Distance,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5, distance: Distance::Euclidean }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbcParams {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for GbcParams {
    fn default() -> Self {
        Self { n_stages: 100, learning_rate: 0.1, max_depth: 3, min_leaf: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PctParams {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for PctParams {
    fn default() -> Self {
        Self { epochs: 1000, learning_rate: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Hyperparams {
    Rf(RfParams),
    Knn(KnnParams),
    Gbc(GbcParams),
    Pct(PctParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub params: Hyperparams,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        let params = match kind {
            ModelKind::Rf => Hyperparams::Rf(RfParams::default()),
            ModelKind::Knn => Hyperparams::Knn(KnnParams::default()),
            ModelKind::Gbc => Hyperparams::Gbc(GbcParams::default()),
            ModelKind::Pct => Hyperparams::Pct(PctParams::default()),
        };
        Self { params, seed }
    }

    pub fn kind(&self) -> ModelKind {
        match self.params {
            Hyperparams::Rf(_) => ModelKind::Rf,
            Hyperparams::Knn(_) => ModelKind::Knn,
            Hyperparams::Gbc(_) => ModelKind::Gbc,
            Hyperparams::Pct(_) => ModelKind::Pct,
        }
    }

    /// Overrides one hyperparameter from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), LearnError> {
        let kind = self.kind();
        let bad = || LearnError::InvalidHyperparameter(format!("{kind}.{key} = {value}"));
        fn count(v: &str) -> Option<usize> {
            v.parse().ok().filter(|&n| n > 0)
        }
        fn rate(v: &str) -> Option<f64> {
            v.parse().ok().filter(|&r: &f64| r > 0.0 && r.is_finite())
        }
        match (&mut self.params, key) {
            (Hyperparams::Rf(p), "n_trees") => p.n_trees = count(value).ok_or_else(bad)?,
            (Hyperparams::Rf(p), "max_depth") => {
                p.max_depth = if value == "none" { None } else { Some(count(value).ok_or_else(bad)?) }
            }
            (Hyperparams::Rf(p), "min_leaf") => p.min_leaf = count(value).ok_or_else(bad)?,
            (Hyperparams::Rf(p), "max_features") => {
                p.max_features = match value {
                    "sqrt" => MaxFeatures::Sqrt,
                    "log2" => MaxFeatures::Log2,
                    "all" => MaxFeatures::All,
                    v => MaxFeatures::Count(count(v).ok_or_else(bad)?),
                }
            }
            (Hyperparams::Rf(p), "bootstrap") => p.bootstrap = value.parse().map_err(|_| bad())?,
            (Hyperparams::Knn(p), "k") => p.k = count(value).ok_or_else(bad)?,
            (Hyperparams::Knn(p), "distance") => {
                p.distance = match value {
                    "euclidean" => Distance::Euclidean,
                    "cosine" => Distance::Cosine,
                    _ => return Err(bad()),
                }
            }
            (Hyperparams::Gbc(p), "n_stages") => p.n_stages = count(value).ok_or_else(bad)?,
            (Hyperparams::Gbc(p), "learning_rate") => p.learning_rate = rate(value).ok_or_else(bad)?,
            (Hyperparams::Gbc(p), "max_depth") => p.max_depth = count(value).ok_or_else(bad)?,
            (Hyperparams::Gbc(p), "min_leaf") => p.min_leaf = count(value).ok_or_else(bad)?,
            (Hyperparams::Pct(p), "epochs") => p.epochs = count(value).ok_or_else(bad)?,
            (Hyperparams::Pct(p), "learning_rate") => p.learning_rate = rate(value).ok_or_else(bad)?,
            _ => return Err(LearnError::InvalidHyperparameter(format!("{kind} has no parameter `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: &str| Err(LearnError::InvalidHyperparameter(m.to_string()));
        match &self.params {
            Hyperparams::Rf(p) if p.n_trees == 0 || p.min_leaf == 0 || p.max_depth == Some(0) => {
                bad("rf counts must be positive")
            }
            Hyperparams::Rf(RfParams { max_features: MaxFeatures::Count(0), .. }) => {
                bad("rf max_features must be positive")
            }
            Hyperparams::Knn(p) if p.k == 0 => bad("knn k must be positive"),
            Hyperparams::Gbc(p) if p.n_stages == 0 || p.max_depth == 0 || p.min_leaf == 0 => {
                bad("gbc counts must be positive")
            }
            Hyperparams::Gbc(p) if !(p.learning_rate > 0.0 && p.learning_rate.is_finite()) => {
                bad("gbc learning_rate must be positive")
            }
            Hyperparams::Pct(p) if p.epochs == 0 || !(p.learning_rate > 0.0 && p.learning_rate.is_finite()) => {
                bad("pct epochs and learning_rate must be positive")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelState {
    Rf(RandomForest),
    Knn(Knn),
    Gbc(GradientBoosting),
    Pct(Perceptron),
    /// Fallback when no column varies across the training rows.
    Constant {
        proba: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: ClassifierSpec,
    pub n_features: usize,
    pub state: ModelState,
    pub importances: Option<Vec<f64>>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Scales to unit sum; uniform when nothing was attributed.
pub(crate) fn normalize_importances(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    } else if !v.is_empty() {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
    v
}

pub fn fit(spec: &ClassifierSpec, design: &Design, labels: &[u8]) -> Result<TrainedModel, LearnError> {
    spec.validate()?;
    if labels.len() != design.n_rows() {
        return Err(LearnError::LabelCount(design.n_rows(), labels.len()));
    }
    let ones = labels.iter().filter(|&&l| l == 1).count();
    if ones == 0 || ones == labels.len() {
        return Err(LearnError::DegenerateLabels);
    }
    let p = design.n_cols();
    let uniform = || Some(normalize_importances(vec![0.0; p]));
    let (state, importances) = if design.all_rows_identical() {
        let proba = ones as f64 / labels.len() as f64;
        let imp = if spec.kind().has_importances() { uniform() } else { None };
        (ModelState::Constant { proba }, imp)
    } else {
        match &spec.params {
            Hyperparams::Rf(params) => {
                let (m, imp) = forest::fit(design, labels, params, spec.seed);
                (ModelState::Rf(m), Some(imp))
            }
            Hyperparams::Gbc(params) => {
                let (m, imp) = gbc::fit(design, labels, params);
                (ModelState::Gbc(m), Some(imp))
            }
            Hyperparams::Knn(params) => (
                ModelState::Knn(Knn {
                    k: params.k,
                    distance: params.distance,
                    rows: design.rows().to_vec(),
                    labels: labels.to_vec(),
                }),
                None,
            ),
            Hyperparams::Pct(params) => (ModelState::Pct(perceptron::fit(design, labels, params, spec.seed)), None),
        }
    };
    Ok(TrainedModel { format_version: MODEL_FORMAT_VERSION, spec: spec.clone(), n_features: p, state, importances })
}

pub fn fit_matrix(spec: &ClassifierSpec, matrix: &FeatureMatrix) -> Result<TrainedModel, LearnError> {
    let design = Design::new(&matrix.rows, matrix.n_cols())?;
    fit(spec, &design, &matrix.labels)
}

pub fn threshold(proba: f64) -> u8 {
    u8::from(proba >= 0.5)
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    pub fn importances(&self) -> Result<&[f64], LearnError> {
        self.importances.as_deref().ok_or(LearnError::EstimatorWithoutImportances(self.kind()))
    }

    pub fn proba_row(&self, row: &SparseRow) -> f64 {
        match &self.state {
            ModelState::Rf(m) => m.predict_proba(row),
            ModelState::Knn(m) => m.predict_proba(row),
            ModelState::Gbc(m) => m.predict_proba(row),
            ModelState::Pct(m) => m.predict_proba(row),
            ModelState::Constant { proba } => *proba,
        }
    }

    pub fn predict_proba(&self, rows: &[SparseRow], n_cols: usize) -> Result<Vec<f64>, LearnError> {
        if n_cols != self.n_features {
            return Err(LearnError::ShapeMismatch { expected: self.n_features, found: n_cols });
        }
        for (r, row) in rows.iter().enumerate() {
            if let Some(&c) = row.indices.last() {
                if c as usize >= n_cols {
                    return Err(LearnError::ShapeMismatch { expected: self.n_features, found: c as usize + 1 });
                }
            }
            if let Some(c) = row.values.iter().position(|v| !v.is_finite()) {
                return Err(LearnError::NonFiniteFeature { row: r, col: row.indices[c] as usize });
            }
        }
        Ok(rows.iter().map(|r| self.proba_row(r)).collect())
    }

    pub fn predict(&self, rows: &[SparseRow], n_cols: usize) -> Result<Vec<u8>, LearnError> {
        Ok(self.predict_proba(rows, n_cols)?.into_iter().map(threshold).collect())
    }

    pub fn predict_proba_matrix(&self, m: &FeatureMatrix) -> Result<Vec<f64>, LearnError> {
        self.predict_proba(&m.rows, m.n_cols())
    }

    pub fn predict_matrix(&self, m: &FeatureMatrix) -> Result<Vec<u8>, LearnError> {
        self.predict(&m.rows, m.n_cols())
    }

    pub fn predict_proba_dense(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, LearnError> {
        let sparse: Vec<SparseRow> = rows.iter().map(|r| dense_to_sparse(r)).collect();
        let n = rows.first().map_or(self.n_features, Vec::len);
        self.predict_proba(&sparse, n)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LearnError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| LearnError::ModelFile(e.to_string()))?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(MODEL_FORMAT_VERSION) => {}
            other => return Err(LearnError::ModelFile(format!("unsupported format version {other:?}"))),
        }
        serde_json::from_value(value).map_err(|e| LearnError::ModelFile(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), LearnError> {
        std::fs::write(path, self.to_json()).map_err(|e| LearnError::ModelFile(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, LearnError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| LearnError::ModelFile(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
