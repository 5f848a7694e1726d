//! Pattern and n-gram mining, churn metrics, vocabularies and sparse encoding.

mod extract;
mod gs;
mod matrix;
mod sidecar;
mod vocab;

pub use extract::{
    extract_ngrams, extract_tp, extract_ts, featurize_dataset, featurize_patch, CommitFeatures, ExtractOptions,
    GramMultiset, Multiset, PatternMultiset, DEFAULT_N_RANGE,
};
pub use gs::{attach_gs, load_gs, GsFeatureRow, GsSchema, DEFAULT_GS_METRICS};
pub use matrix::{assemble_matrix, encode, EncodeDiagnostics, FeatureMatrix, SparseRow};
pub use sidecar::{read_sidecar, write_sidecar};
pub use vocab::{build_vocabulary, FeatureCombo, FeatureVocabulary, Namespace};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum FeaturizeError {
    #[error("{path}: {detail}")]
    Io { path: PathBuf, detail: String },
    #[error("commit {commit_id}: missing metric `{metric}`")]
    MissingMetric { commit_id: String, metric: String },
    #[error("commit {commit_id}: metric `{metric}` is not a finite number (`{value}`)")]
    NonFiniteValue { commit_id: String, metric: String, value: String },
    #[error("commit {0} has no churn metric row")]
    MissingGsRow(String),
    #[error("no features observed for combo {0}")]
    EmptyVocabulary(String),
    #[error("unknown feature combo `{0}`")]
    UnknownCombo(String),
    #[error("unknown namespace `{0}`")]
    UnknownNamespace(String),
    #[error("features for {found} do not line up with dataset record {expected}")]
    Misaligned { expected: String, found: String },
    #[error("malformed sidecar: {0}")]
    Sidecar(String),
    #[error(transparent)]
    Syntax(#[from] crate::syntax::SyntaxError),
}
