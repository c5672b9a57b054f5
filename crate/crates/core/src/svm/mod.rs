//! Soft-margin kernel SVM trained by sequential minimal optimisation, with
//! one-vs-one multiclass voting and cost/gamma grid search.

mod binary;
mod grid;
mod kernel;
mod matrix;
mod multiclass;
mod persist;
mod smo;

pub use binary::{train_binary, train_binary_with, BinaryFit, BinarySvm};
pub use grid::{grid_search, Grid, GridCell, GridOptions, GridResult};
pub use kernel::{kernel_eval, Gram, KernelSpec};
pub use matrix::KernelMatrix;
pub use multiclass::{
    train_multiclass, train_multiclass_with, vote_pairs, PairMachine, Prediction, Scaler, SvmModel, CLASS_PAIRS,
};
pub use persist::{from_bytes, load_model, save_model, to_bytes, MAGIC};
pub use smo::{solve, DualSolution, SmoConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("vector length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("class {0} has no training examples")]
    MissingClass(usize),
    #[error("invalid label: {0}")]
    InvalidLabel(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("parameter grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Folds(#[from] crate::eval::EvalError),
}
