use thiserror::Error;

use crate::acnn::AcnnError;
use crate::container::FormatError;
use crate::eval::EvalError;
use crate::imaging::ImagingError;
use crate::svm::SvmError;
use crate::texfeat::TexError;

/// Crate-level error aggregating the per-module error types.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Acnn(#[from] AcnnError),
    #[error(transparent)]
    Texture(#[from] TexError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("I/O error at {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
