//! Classification metrics, significance tests and cross-combo comparison.

mod compare;
mod metrics;
mod report;
mod stats;
mod svg;

pub use compare::{compare_combos, ComparisonReport, Improvement, PairTest};
pub use metrics::{auc, metrics, ConfusionCounts, EvalRow, Metrics};
pub use report::{comparison_markdown, read_results_csv, write_reports, write_results_csv};
pub use stats::{correlation, midranks, wilcoxon_signed_rank, CorrelationKind, StatTest, StatTestResult};
pub use svg::{box_plot_svg, improvement_svg};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("AUC is undefined when only one class is present")]
    SingleClassAuc,
    #[error("every difference is zero")]
    AllZeroDifferences,
    #[error("series is constant")]
    ConstantSeries,
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("combos {a} and {b} were not evaluated on the same projects")]
    UnpairedProjects { a: String, b: String },
    #[error("{path}: {detail}")]
    Io { path: std::path::PathBuf, detail: String },
}
