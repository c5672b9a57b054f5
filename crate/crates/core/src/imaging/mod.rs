//! Source images, patch extraction, augmentation and resampling.
//!
//! Every source image yields four 300x300 patches (two anchored on the top
//! edge, two on the bottom edge) and each patch is expanded into five
//! lossless variants, giving 20 patches per image.

mod dataset;
mod patch;
mod raster;

pub use dataset::{load_dataset, write_dataset, CLASS_DIRS, PATIENTS_FILE};
pub use patch::{
    augment, downsample, downsample_to, expand, expand_sized, extract_patches, extract_patches_sized,
    to_grayscale, LowResPatch, Patch, PatchPosition, PatchTag, Variant, LOW_RES_SIZE, PATCH_SIZE,
};
pub use raster::{GrayImage, RgbImage};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("image {width}x{height} is smaller than the {min}x{min} patch size")]
    TooSmall { width: usize, height: usize, min: usize },
    #[error("raster buffer has {actual} bytes, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("cannot decode {path}: {message}")]
    Decode { path: String, message: String },
    #[error("cannot encode {path}: {message}")]
    Encode { path: String, message: String },
    #[error("invalid synthetic dataset spec: {0}")]
    InvalidSpec(String),
    #[error("dataset at {0} contains no images")]
    EmptyDataset(String),
    #[error("malformed patients file {path}, line {line}: {message}")]
    PatientsFile { path: String, line: usize, message: String },
    #[error("I/O error at {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Tissue class; `Normal` is the only non-cancer class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    Normal = 0,
    Hp = 1,
    TaLg = 2,
    Ca = 3,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 4] = [ClassLabel::Normal, ClassLabel::Hp, ClassLabel::TaLg, ClassLabel::Ca];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Directory name used in the on-disk dataset layout.
    pub fn dir_name(self) -> &'static str {
        CLASS_DIRS[self.index()]
    }

    pub fn from_dir_name(name: &str) -> Option<Self> {
        CLASS_DIRS.iter().position(|&d| d == name).and_then(Self::from_index)
    }

    pub fn is_cancer(self) -> bool {
        self != ClassLabel::Normal
    }
}

impl std::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.dir_name())
    }
}

/// A labelled RGB source image (640x480 in the reference acquisition setup).
#[derive(Debug, Clone)]
pub struct SourceImage {
    pub raster: RgbImage,
    pub label: ClassLabel,
    pub image_id: String,
    pub patient_id: String,
}

impl SourceImage {
    pub fn new(raster: RgbImage, label: ClassLabel, image_id: impl Into<String>) -> Self {
        let image_id = image_id.into();
        Self { raster, label, patient_id: image_id.clone(), image_id }
    }

    pub fn with_patient(mut self, patient_id: impl Into<String>) -> Self {
        self.patient_id = patient_id.into();
        self
    }
}
