//! Cross-validation planning, per-image voting over patch scores, confusion
//! matrices and detection metrics, and the experiment driver.

mod experiment;
mod folds;
mod methods;
mod metrics;
mod vote;

pub use experiment::{run_experiment, ExperimentOptions, ExperimentReport, FoldReport, ImagePrediction, Method, TrainItem};
pub use folds::{assign_folds, make_folds, Fold, FoldPlan, DEFAULT_FOLDS};
pub use methods::{AcnnMethod, SvmMethod, SvmSample};
pub use metrics::{collapse, metrics, ConfusionMatrix2, ConfusionMatrix4, MetricsReport};
pub use vote::{vote, Vote};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("fold count must be at least 2, got {0}")]
    InvalidFoldCount(usize),
    #[error("class {class} has {have} images (or patient groups) but {need} folds were requested")]
    TooFewImages { class: usize, have: usize, need: usize },
    #[error("cannot vote over an empty set of patch scores")]
    EmptyVote,
    #[error("label/group length mismatch: {0}")]
    LengthMismatch(String),
    #[error("invalid class index {0}")]
    InvalidClass(usize),
    #[error("method produced a score vector of length {0}")]
    BadScores(usize),
}
