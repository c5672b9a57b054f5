//! Patch-based histology image classification.
//!
//! Two classification tracks share one evaluation harness:
//!
//! * [`acnn`]: a compact CNN whose hidden neurons fuse convolution and
//!   subsampling, trained from scratch by hand-written backpropagation on
//!   64x64 RGB patches.
//! * [`texfeat`] + [`svm`]: texture descriptors (LBP family, LPQ family,
//!   GLCM statistics) on full-resolution grayscale patches, classified with
//!   a one-vs-one kernel SVM trained by SMO.
//!
//! [`imaging`] turns each source image into 20 augmented patches and
//! [`eval`] runs k-fold cross-validation with per-image majority voting.

pub mod acnn;
pub mod container;
pub mod eval;
pub mod imaging;
pub mod par;
pub mod svm;
pub mod synth;
pub mod texfeat;

mod error;

pub use error::{Error, Result};
pub use imaging::ClassLabel;

/// Number of tissue classes.
pub const NUM_CLASSES: usize = 4;
