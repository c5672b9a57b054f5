use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ClassLabel, GrayImage, ImagingError, RgbImage, SourceImage};

/// Side length of extracted patches.
pub const PATCH_SIZE: usize = 300;
/// Side length of the network input.
pub const LOW_RES_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PatchPosition {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
}

impl PatchPosition {
    pub const ALL: [PatchPosition; 4] =
        [PatchPosition::TopLeft, PatchPosition::TopRight, PatchPosition::BottomLeft, PatchPosition::BottomRight];

    pub fn short_name(self) -> &'static str {
        match self {
            PatchPosition::TopLeft => "tl",
            PatchPosition::TopRight => "tr",
            PatchPosition::BottomLeft => "bl",
            PatchPosition::BottomRight => "br",
        }
    }

    /// Top-left corner `(row, col)` of this patch inside a `width`x`height` image.
    pub fn anchor(self, width: usize, height: usize, size: usize) -> (usize, usize) {
        let bottom = height - size;
        let right = width - size;
        match self {
            PatchPosition::TopLeft => (0, 0),
            PatchPosition::TopRight => (0, right),
            PatchPosition::BottomLeft => (bottom, 0),
            PatchPosition::BottomRight => (bottom, right),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    Orig,
    Rot90,
    Rot180,
    Rot270,
    Transpose,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Orig, Variant::Rot90, Variant::Rot180, Variant::Rot270, Variant::Transpose];

    pub fn short_name(self) -> &'static str {
        match self {
            Variant::Orig => "orig",
            Variant::Rot90 => "rot90",
            Variant::Rot180 => "rot180",
            Variant::Rot270 => "rot270",
            Variant::Transpose => "transpose",
        }
    }

    /// Source coordinate read for destination `(r, c)` of an `n`x`n` raster.
    #[inline]
    fn source_index(self, r: usize, c: usize, n: usize) -> (usize, usize) {
        let last = n - 1;
        match self {
            Variant::Orig => (r, c),
            // rot90 sends (r, c) to (c, last - r), so the inverse reads (last - c, r).
            Variant::Rot90 => (last - c, r),
            Variant::Rot180 => (last - r, last - c),
            Variant::Rot270 => (c, last - r),
            Variant::Transpose => (c, r),
        }
    }

    /// Applies this index permutation to a square raster.
    pub fn apply(self, src: &RgbImage) -> RgbImage {
        let n = src.width();
        assert_eq!(n, src.height(), "augmentation requires a square raster");
        if self == Variant::Orig {
            return src.clone();
        }
        RgbImage::from_fn(n, n, |r, c| {
            let (sr, sc) = self.source_index(r, c, n);
            src.pixel(sr, sc)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatchTag {
    pub position: PatchPosition,
    pub variant: Variant,
}

impl std::fmt::Display for PatchTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.position.short_name(), self.variant.short_name())
    }
}

/// A square RGB patch cut from a source image.
#[derive(Debug, Clone)]
pub struct Patch {
    pub raster: RgbImage,
    pub label: ClassLabel,
    pub parent_image_id: Arc<str>,
    pub tag: PatchTag,
}

/// Network-resolution patch: three planes with values in `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct LowResPatch {
    pub size: usize,
    pub planes: [Vec<f64>; 3],
    pub label: ClassLabel,
    pub parent_image_id: Arc<str>,
}

/// Cuts the four 300x300 corner patches out of `img`.
pub fn extract_patches(img: &SourceImage) -> Result<[Patch; 4], ImagingError> {
    extract_patches_sized(img, PATCH_SIZE)
}

/// [`extract_patches`] with a configurable patch side.
pub fn extract_patches_sized(img: &SourceImage, size: usize) -> Result<[Patch; 4], ImagingError> {
    let (w, h) = (img.raster.width(), img.raster.height());
    if w < size || h < size {
        return Err(ImagingError::TooSmall { width: w, height: h, min: size });
    }
    let parent: Arc<str> = Arc::from(img.image_id.as_str());
    Ok(PatchPosition::ALL.map(|position| {
        let (row, col) = position.anchor(w, h, size);
        Patch {
            raster: img.raster.crop_square(row, col, size),
            label: img.label,
            parent_image_id: Arc::clone(&parent),
            tag: PatchTag { position, variant: Variant::Orig },
        }
    }))
}

/// Returns the patch followed by its 90/180/270 degree rotations and transpose.
pub fn augment(p: &Patch) -> [Patch; 5] {
    Variant::ALL.map(|variant| Patch {
        raster: variant.apply(&p.raster),
        label: p.label,
        parent_image_id: Arc::clone(&p.parent_image_id),
        tag: PatchTag { position: p.tag.position, variant },
    })
}

/// All 20 augmented patches of a source image.
pub fn expand(img: &SourceImage) -> Result<Vec<Patch>, ImagingError> {
    expand_sized(img, PATCH_SIZE)
}

pub fn expand_sized(img: &SourceImage, size: usize) -> Result<Vec<Patch>, ImagingError> {
    Ok(extract_patches_sized(img, size)?.iter().flat_map(augment).collect())
}

/// Bilinear resampling of each channel to 64x64 followed by `v -> 2 v / 255 - 1`.
pub fn downsample(p: &Patch) -> LowResPatch {
    downsample_to(p, LOW_RES_SIZE)
}

/// [`downsample`] to an arbitrary square output size.
///
/// Output pixel centres are aligned with input pixel centres
/// (`src = (dst + 0.5) * in / out - 0.5`, clamped to the raster).
pub fn downsample_to(p: &Patch, out: usize) -> LowResPatch {
    let src = &p.raster;
    let (w, h) = (src.width(), src.height());
    let axis = |n_in: usize| -> Vec<(usize, usize, f64)> {
        let scale = n_in as f64 / out as f64;
        (0..out)
            .map(|o| {
                let x = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_in - 1) as f64);
                let x0 = x.floor() as usize;
                let x1 = (x0 + 1).min(n_in - 1);
                (x0, x1, x - x0 as f64)
            })
            .collect()
    };
    let rows = axis(h);
    let cols = axis(w);
    let raw = src.as_raw();
    let planes = [0usize, 1, 2].map(|ch| {
        let at = |r: usize, c: usize| raw[(r * w + c) * 3 + ch] as f64;
        let mut plane = Vec::with_capacity(out * out);
        for &(r0, r1, fy) in &rows {
            for &(c0, c1, fx) in &cols {
                let top = at(r0, c0) * (1.0 - fx) + at(r0, c1) * fx;
                let bottom = at(r1, c0) * (1.0 - fx) + at(r1, c1) * fx;
                let v = top * (1.0 - fy) + bottom * fy;
                plane.push((2.0 * (v / 255.0) - 1.0).clamp(-1.0, 1.0));
            }
        }
        plane
    });
    LowResPatch { size: out, planes, label: p.label, parent_image_id: Arc::clone(&p.parent_image_id) }
}

/// BT.601 luma `0.299 R + 0.587 G + 0.114 B`.
pub fn to_grayscale(p: &Patch) -> GrayImage {
    rgb_to_gray(&p.raster)
}

pub(crate) fn rgb_to_gray(img: &RgbImage) -> GrayImage {
    let data = img
        .as_raw()
        .chunks_exact(3)
        .map(|px| 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64)
        .collect();
    GrayImage::from_raw(img.width(), img.height(), data).expect("dimensions preserved")
}
