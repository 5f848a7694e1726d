//! End-to-end orchestration over file artifacts.
//!
//! Every stage reads the previous stage's files under the output directory
//! and writes its own, so any stage can be rerun in isolation.

mod config;
mod manifest;
mod stages;

pub use config::{ExplainConfig, ProjectConfig, RunConfig, SelectionConfig, VocabScope, DEFAULT_SEED};
pub use manifest::{build_manifest, write_manifest, Manifest};
pub use stages::{Pipeline, Stage};

use std::path::PathBuf;

use crate::corpus::CorpusError;
use crate::evaluate::EvalError;
use crate::explain::ExplainError;
use crate::featurize::FeaturizeError;
use crate::learn::LearnError;
use crate::select::SelectError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{project}: {source}")]
    Corpus {
        project: String,
        #[source]
        source: CorpusError,
    },
    #[error("{context}: {source}")]
    Featurize {
        context: String,
        #[source]
        source: FeaturizeError,
    },
    #[error("{context}: {source}")]
    Learn {
        context: String,
        #[source]
        source: LearnError,
    },
    #[error("{context}: {source}")]
    Select {
        context: String,
        #[source]
        source: SelectError,
    },
    #[error("{context}: {source}")]
    Eval {
        context: String,
        #[source]
        source: EvalError,
    },
    #[error("{context}: {source}")]
    Explain {
        context: String,
        #[source]
        source: ExplainError,
    },
    #[error("{path}: {detail}")]
    Io { path: PathBuf, detail: String },
    #[error("{path}: missing artifact, run `{stage}` first")]
    MissingArtifact { path: PathBuf, stage: &'static str },
}

impl PipelineError {
    /// 1 for configuration problems, 2 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Learn { source: LearnError::InvalidHyperparameter(_), .. } => 1,
            PipelineError::Select { source: SelectError::Learn(LearnError::InvalidHyperparameter(_)), .. } => 1,
            _ => 2,
        }
    }
}

pub(crate) fn io_error(path: &std::path::Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io { path: path.to_path_buf(), detail: e.to_string() }
}
