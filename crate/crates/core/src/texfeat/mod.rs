//! Texture descriptors on single-channel images.
//!
//! Histogram descriptors are computed over interior pixels only (pixels whose
//! whole neighbourhood lies inside the image) and are L1-normalised.

mod glcm;
mod lbp;
mod lpq;

pub use glcm::{glcm_compute, haralick, haralick_direction, haralick_features, Glcm, HaralickStats, DEFAULT_LEVELS, GLCM_OFFSETS};
pub use lbp::{lbp_codes, lbp_hist, riu2_bin, rlbp_class, rlbp_hist, urlbp_hist, LBP_OFFSETS};
pub use lpq::{lpq_codes, lpq_hist, rlpq_codes, rlpq_hist, LPQ_WINDOW, RLPQ_WINDOW, ZERO_TOLERANCE};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::GrayImage;

#[derive(Debug, Error)]
pub enum TexError {
    #[error("{descriptor} needs at least a {min}x{min} image, got {width}x{height}")]
    ImageTooSmall { descriptor: &'static str, min: usize, width: usize, height: usize },
    #[error("unknown descriptor `{0}`")]
    UnknownDescriptor(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub(crate) fn require_size(img: &GrayImage, min: usize, descriptor: &'static str) -> Result<(), TexError> {
    if img.width() < min || img.height() < min {
        return Err(TexError::ImageTooSmall { descriptor, min, width: img.width(), height: img.height() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Descriptor {
    Lbp,
    Rlbp,
    Urlbp,
    Lpq,
    Rlpq,
    Haralick,
    Concat,
}

impl Descriptor {
    pub const EXTRACTABLE: [Descriptor; 6] =
        [Descriptor::Lbp, Descriptor::Rlbp, Descriptor::Urlbp, Descriptor::Lpq, Descriptor::Rlpq, Descriptor::Haralick];

    pub fn id(self) -> &'static str {
        match self {
            Descriptor::Lbp => "lbp",
            Descriptor::Rlbp => "rlbp",
            Descriptor::Urlbp => "urlbp",
            Descriptor::Lpq => "lpq",
            Descriptor::Rlpq => "rlpq",
            Descriptor::Haralick => "haralick",
            Descriptor::Concat => "concat",
        }
    }

    /// Fixed output length; `None` for concatenations.
    pub fn len(self) -> Option<usize> {
        match self {
            Descriptor::Lbp | Descriptor::Lpq | Descriptor::Rlpq => Some(256),
            Descriptor::Rlbp => Some(36),
            Descriptor::Urlbp => Some(10),
            Descriptor::Haralick => Some(4),
            Descriptor::Concat => None,
        }
    }

    pub fn is_histogram(self) -> bool {
        !matches!(self, Descriptor::Haralick | Descriptor::Concat)
    }

    /// Computes this descriptor with its default parameters.
    pub fn extract(self, img: &GrayImage) -> Result<FeatureVector, TexError> {
        match self {
            Descriptor::Lbp => lbp_hist(img),
            Descriptor::Rlbp => rlbp_hist(img),
            Descriptor::Urlbp => urlbp_hist(img),
            Descriptor::Lpq => lpq_hist(img, LPQ_WINDOW),
            Descriptor::Rlpq => rlpq_hist(img, RLPQ_WINDOW),
            Descriptor::Haralick => haralick_features(img, DEFAULT_LEVELS),
            Descriptor::Concat => Err(TexError::Parameter("concat is built from other descriptors".into())),
        }
    }
}

impl std::fmt::Display for Descriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

impl std::str::FromStr for Descriptor {
    type Err = TexError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lbp" => Ok(Descriptor::Lbp),
            "rlbp" => Ok(Descriptor::Rlbp),
            "urlbp" => Ok(Descriptor::Urlbp),
            "lpq" => Ok(Descriptor::Lpq),
            "rlpq" => Ok(Descriptor::Rlpq),
            "haralick" => Ok(Descriptor::Haralick),
            "concat" => Ok(Descriptor::Concat),
            _ => Err(TexError::UnknownDescriptor(s.to_string())),
        }
    }
}

/// A sequence of descriptors whose outputs are concatenated in order,
/// e.g. `rlpq+rlbp`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSet(pub Vec<Descriptor>);

impl FeatureSet {
    pub fn extract(&self, img: &GrayImage) -> Result<FeatureVector, TexError> {
        let mut parts = self.0.iter().map(|d| d.extract(img));
        let first = parts.next().ok_or_else(|| TexError::Parameter("empty feature set".into()))??;
        parts.try_fold(first, |acc, p| Ok(concat(&acc, &p?)))
    }

    pub fn name(&self) -> String {
        self.0.iter().map(|d| d.id()).collect::<Vec<_>>().join("+")
    }
}

impl std::str::FromStr for FeatureSet {
    type Err = TexError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts = s.split('+').map(|p| p.trim().parse()).collect::<Result<Vec<Descriptor>, _>>()?;
        if parts.is_empty() || parts.contains(&Descriptor::Concat) {
            return Err(TexError::UnknownDescriptor(s.to_string()));
        }
        Ok(FeatureSet(parts))
    }
}

/// Tagged fixed-length descriptor output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub descriptor: Descriptor,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// L1-normalised histogram from raw bin counts.
    pub(crate) fn histogram(descriptor: Descriptor, counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        let scale = if total == 0 { 0.0 } else { 1.0 / total as f64 };
        Self { descriptor, values: counts.iter().map(|&c| c as f64 * scale).collect() }
    }
}

/// Appends `b` to `a`.
pub fn concat(a: &FeatureVector, b: &FeatureVector) -> FeatureVector {
    if b.is_empty() {
        return a.clone();
    }
    if a.is_empty() {
        return b.clone();
    }
    let mut values = Vec::with_capacity(a.len() + b.len());
    values.extend_from_slice(&a.values);
    values.extend_from_slice(&b.values);
    FeatureVector { descriptor: Descriptor::Concat, values }
}

/// One feature-dump row: `image_id,patch_tag,label,descriptor_id,v0,...,vK`.
pub fn csv_row(image_id: &str, patch_tag: &str, label: &str, descriptor_id: &str, values: &[f64]) -> String {
    let mut row = format!("{image_id},{patch_tag},{label},{descriptor_id}");
    for v in values {
        row.push(',');
        row.push_str(&v.to_string());
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(d: Descriptor, v: &[f64]) -> FeatureVector {
        FeatureVector { descriptor: d, values: v.to_vec() }
    }

    #[test]
    fn concat_order_and_identity() {
        let a = fv(Descriptor::Rlpq, &[0.25; 256]);
        let b = fv(Descriptor::Rlbp, &[1.0 / 36.0; 36]);
        assert_eq!(concat(&a, &b).len(), 292);
        let e = fv(Descriptor::Concat, &[]);
        assert_eq!(concat(&a, &e), a);
        let x = fv(Descriptor::Lbp, &[1.0, 0.0]);
        let y = fv(Descriptor::Lbp, &[0.0, 1.0]);
        assert_ne!(concat(&x, &y), concat(&y, &x));
    }

    #[test]
    fn parse_feature_sets() {
        let fs: FeatureSet = "rlpq+rlbp".parse().unwrap();
        assert_eq!(fs.0, vec![Descriptor::Rlpq, Descriptor::Rlbp]);
        assert_eq!(fs.name(), "rlpq+rlbp");
        assert!("sift".parse::<FeatureSet>().is_err());
    }

    #[test]
    fn feature_set_length() {
        let img = GrayImage::from_fn(20, 20, |r, c| ((r * 7 + c * 13) % 17) as f64 * 15.0);
        let fs: FeatureSet = "rlpq+rlbp".parse().unwrap();
        assert_eq!(fs.extract(&img).unwrap().len(), 292);
    }

    #[test]
    fn csv_layout() {
        let row = csv_row("img1", "tl-rot90", "hp", "haralick", &[0.5, 1.0, 2.25, 0.0]);
        assert_eq!(row, "img1,tl-rot90,hp,haralick,0.5,1,2.25,0");
    }
}
