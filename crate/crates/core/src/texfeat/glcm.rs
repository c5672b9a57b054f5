//! Gray-level co-occurrence matrices and Haralick statistics.

use serde::{Deserialize, Serialize};

use super::{require_size, Descriptor, FeatureVector, TexError};
use crate::imaging::GrayImage;

pub const DEFAULT_LEVELS: usize = 32;

/// `(dr, dc)` offsets for 0°, 45°, 90° and 135° at distance 1. Rows grow
/// downwards, so "up" is `dr = -1`.
pub const GLCM_OFFSETS: [(isize, isize); 4] = [(0, 1), (-1, 1), (-1, 0), (-1, -1)];

/// Four symmetric, normalised `levels x levels` matrices, one per direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    pub levels: usize,
    pub matrices: [Vec<f64>; 4],
}

impl Glcm {
    pub fn get(&self, dir: usize, i: usize, j: usize) -> f64 {
        self.matrices[dir][i * self.levels + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaralickStats {
    pub contrast: f64,
    pub correlation: f64,
    pub energy: f64,
    pub homogeneity: f64,
}

impl HaralickStats {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.contrast, self.correlation, self.energy, self.homogeneity]
    }
}

/// Uniform quantisation of a `[0, 255]` intensity into `levels` bins.
pub(crate) fn quantize(v: f64, levels: usize) -> usize {
    let q = (v * levels as f64 / 256.0).floor();
    if q <= 0.0 {
        0
    } else {
        (q as usize).min(levels - 1)
    }
}

pub fn glcm_compute(img: &GrayImage, levels: usize) -> Result<Glcm, TexError> {
    if levels < 2 {
        return Err(TexError::Parameter(format!("GLCM needs at least 2 levels, got {levels}")));
    }
    require_size(img, 2, "haralick")?;
    let (w, h) = (img.width(), img.height());
    let q: Vec<usize> = img.as_slice().iter().map(|&v| quantize(v, levels)).collect();
    let matrices = GLCM_OFFSETS.map(|(dr, dc)| {
        let mut m = vec![0.0; levels * levels];
        let mut pairs = 0u64;
        for r in 0..h as isize {
            let r2 = r + dr;
            if r2 < 0 || r2 >= h as isize {
                continue;
            }
            for c in 0..w as isize {
                let c2 = c + dc;
                if c2 < 0 || c2 >= w as isize {
                    continue;
                }
                let a = q[r as usize * w + c as usize];
                let b = q[r2 as usize * w + c2 as usize];
                m[a * levels + b] += 1.0;
                m[b * levels + a] += 1.0;
                pairs += 2;
            }
        }
        let inv = 1.0 / pairs as f64;
        m.iter_mut().for_each(|v| *v *= inv);
        m
    });
    Ok(Glcm { levels, matrices })
}

fn direction_stats(p: &[f64], levels: usize) -> HaralickStats {
    let idx = |k: usize| (k / levels) as f64;
    let jdx = |k: usize| (k % levels) as f64;
    let (mut mu_i, mut mu_j) = (0.0, 0.0);
    for (k, &v) in p.iter().enumerate() {
        mu_i += idx(k) * v;
        mu_j += jdx(k) * v;
    }
    let (mut var_i, mut var_j, mut cov) = (0.0, 0.0, 0.0);
    let (mut contrast, mut energy, mut homogeneity) = (0.0, 0.0, 0.0);
    for (k, &v) in p.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let (i, j) = (idx(k), jdx(k));
        var_i += (i - mu_i).powi(2) * v;
        var_j += (j - mu_j).powi(2) * v;
        cov += (i - mu_i) * (j - mu_j) * v;
        contrast += (i - j).powi(2) * v;
        energy += v * v;
        homogeneity += v / (1.0 + (i - j).abs());
    }
    let denom = (var_i * var_j).sqrt();
    // A single populated level has no spread; treat it as perfectly correlated.
    let correlation = if denom == 0.0 { 1.0 } else { cov / denom };
    HaralickStats { contrast, correlation, energy, homogeneity }
}

/// Per-direction statistics averaged over the four directions.
pub fn haralick(g: &Glcm) -> HaralickStats {
    let per: Vec<HaralickStats> = g.matrices.iter().map(|m| direction_stats(m, g.levels)).collect();
    let n = per.len() as f64;
    HaralickStats {
        contrast: per.iter().map(|s| s.contrast).sum::<f64>() / n,
        correlation: per.iter().map(|s| s.correlation).sum::<f64>() / n,
        energy: per.iter().map(|s| s.energy).sum::<f64>() / n,
        homogeneity: per.iter().map(|s| s.homogeneity).sum::<f64>() / n,
    }
}

/// Direction-specific statistics, index matching [`GLCM_OFFSETS`].
pub fn haralick_direction(g: &Glcm, dir: usize) -> HaralickStats {
    direction_stats(&g.matrices[dir], g.levels)
}

pub fn haralick_features(img: &GrayImage, levels: usize) -> Result<FeatureVector, TexError> {
    let stats = haralick(&glcm_compute(img, levels)?);
    Ok(FeatureVector { descriptor: Descriptor::Haralick, values: stats.to_vec() })
}
