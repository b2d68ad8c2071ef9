//! Labeled corpora, splits, confusion matrices and comparison reports.

mod compare;
mod manifest;
mod metrics;

pub use compare::{
    collect_model_runs, compare_models, compare_prompts, ComparisonReport, ModelKind, ModelRun,
    ModelRuns, PromptComparison, PromptRow, SkippedEntry,
};
pub use manifest::{split, DatasetManifest, ManifestEntry};
pub use metrics::{
    classification_report, confusion, metrics, ClassMetrics, ClassReport, ConfusionMatrix,
    Degenerate, Metrics,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("manifest has no entries")]
    EmptyManifest,
    #[error("duplicate manifest id {0:?}")]
    DuplicateId(String),
    #[error("manifest line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("{predictions} predictions for {truths} truths")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("nothing to evaluate")]
    EmptyInput,
    #[error("truths contain a single class; per-class report undefined")]
    SingleClassDataset,
    #[error("{model} was not evaluated on the reference manifest")]
    ManifestMismatch { model: String },
    #[error("fusion dominance violated: {0}")]
    DominanceViolation(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
