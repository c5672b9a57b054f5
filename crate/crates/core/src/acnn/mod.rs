//! Adaptive compact CNN trained from scratch.
//!
//! Hidden CNN neurons fuse convolution and subsampling: a neuron's input map
//! is `x_k = b_k + sum_i conv2d_valid(s_i, w_ik)`, its intermediate output is
//! `y_k = f(x_k)` and its final output `s_k` is `y_k` pooled by the layer's
//! subsampling factors. The last CNN layer pools its whole map, so its
//! outputs are scalars feeding an ordinary MLP.

mod backprop;
mod gradcheck;
pub mod map;
mod network;
mod persist;
mod topology;
mod train;

pub use backprop::{backprop, output_error, update, GradientSet};
pub use gradcheck::{check_gradients, check_random, relative_error, GradCheckOptions, GradCheckReport};
pub use map::{avg_pool, conv2d_full, conv2d_valid, max_pool, Map};
pub use network::{input_maps, ConvCache, DenseCache, ForwardCache, LayerParams, Network};
pub use persist::{from_bytes, load_model, save_model, to_bytes, MAGIC};
pub use topology::{Activation, ConvGeometry, Pooling, Topology};
pub use train::{
    classification_error, train, train_from, train_with, IterationLog, StopReason, TargetVector, TrainLog,
    TrainingConfig, TrainingSample,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AcnnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training diverged at iteration {iteration}")]
    Diverged { iteration: usize },
}
