//! Recursive feature elimination and greedy forward selection.

mod analysis;
mod greedy;
mod rfe;

pub use analysis::{best_set_size_analysis, BestSetSize, SizeCorrelation};
pub use greedy::{greedy_forward_select, Criterion, SelectionResult, TraceStep};
pub use rfe::{read_rank_csv, rfe_rank, write_rank_csv, CoarseSchedule, RankedFeatureList};

use crate::evaluate::EvalError;
use crate::learn::LearnError;

#[derive(Debug, thiserror::Error)]
pub enum SelectError {
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("ranking needs at least one column")]
    NoColumns,
    #[error("ranking covers {ranked} columns but the matrix has {columns}")]
    RankMismatch { ranked: usize, columns: usize },
    #[error("size analysis needs at least 3 projects, got {0}")]
    TooFewProjects(usize),
    #[error("{path}: {detail}")]
    Io { path: std::path::PathBuf, detail: String },
}
