//! Synthetic four-class texture dataset.
//!
//! Each image is a sum of two sinusoidal gratings plus Gaussian pixel noise,
//! tinted with a random stain-like colour. Orientation, phase, tint and the
//! exact frequency vary per image; the frequency band (cycles per pixel) is
//! what identifies the class. The bands are disjoint, with classes 0 and 1
//! deliberately adjacent so that they are the hardest pair to tell apart.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::imaging::{ClassLabel, ImagingError, RgbImage, SourceImage};
use crate::{par, NUM_CLASSES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub images_per_class: usize,
    pub width: usize,
    pub height: usize,
    /// Per-class `[low, high)` dominant frequency bands, cycles per pixel.
    pub bands: [(f64, f64); NUM_CLASSES],
    /// Amplitude of the dominant grating in gray levels.
    pub amplitude: f64,
    /// Standard deviation of the additive pixel noise in gray levels.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            images_per_class: 50,
            width: 640,
            height: 480,
            bands: [(0.015, 0.022), (0.026, 0.034), (0.045, 0.055), (0.065, 0.078)],
            amplitude: 50.0,
            noise: 12.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), ImagingError> {
        if self.images_per_class == 0 {
            return Err(ImagingError::InvalidSpec("images per class must be at least 1".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(ImagingError::InvalidSpec(format!("image size {}x{} is empty", self.width, self.height)));
        }
        for (k, &(lo, hi)) in self.bands.iter().enumerate() {
            if !(lo > 0.0 && hi > lo && hi < 0.5) {
                return Err(ImagingError::InvalidSpec(format!("class {k} band [{lo}, {hi}) is not inside (0, 0.5)")));
            }
        }
        if !(self.amplitude >= 0.0 && self.noise >= 0.0) {
            return Err(ImagingError::InvalidSpec("amplitude and noise must be non-negative".into()));
        }
        Ok(())
    }
}

/// Patient id of image `i` within its class: three images for every two
/// patients, so some patients contribute two images.
fn patient_of(class: ClassLabel, i: usize) -> String {
    format!("{}-p{:03}", class.dir_name(), i * 2 / 3)
}

fn render(spec: &SyntheticSpec, class: ClassLabel, i: usize) -> SourceImage {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream((class.index() * 1_000_000 + i) as u64);
    let (lo, hi) = spec.bands[class.index()];
    let f1 = rng.gen_range(lo..hi);
    let f2 = rng.gen_range(lo..hi);
    let theta1 = rng.gen_range(0.0..std::f64::consts::PI);
    let theta2 = theta1 + rng.gen_range(0.35..1.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let (phi1, phi2) = (rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.0..std::f64::consts::TAU));
    let a1 = spec.amplitude * rng.gen_range(0.9..1.1);
    let a2 = 0.5 * a1;
    let base = rng.gen_range(115.0..140.0);
    // Hematoxylin/eosin-like tint, independent of class.
    let tint = [rng.gen_range(0.85..1.0), rng.gen_range(0.55..0.75), rng.gen_range(0.75..0.95)];
    let noise = Normal::new(0.0, spec.noise.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let (k1, k2) = (std::f64::consts::TAU * f1, std::f64::consts::TAU * f2);
    let (c1, s1, c2, s2) = (theta1.cos(), theta1.sin(), theta2.cos(), theta2.sin());

    let mut raster = RgbImage::filled(spec.width, spec.height, [0, 0, 0]);
    for r in 0..spec.height {
        for c in 0..spec.width {
            let (x, y) = (c as f64, r as f64);
            let v = base
                + a1 * (k1 * (x * c1 + y * s1) + phi1).sin()
                + a2 * (k2 * (x * c2 + y * s2) + phi2).sin()
                + if spec.noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            let px = tint.map(|t| (v * t + (1.0 - t) * 255.0).round().clamp(0.0, 255.0) as u8);
            raster.set_pixel(r, c, px);
        }
    }
    let image_id = format!("{}_{:03}", class.dir_name(), i);
    SourceImage::new(raster, class, image_id).with_patient(patient_of(class, i))
}

/// Generates the dataset in class order; deterministic for a given spec.
pub fn generate(spec: &SyntheticSpec) -> Result<Vec<SourceImage>, ImagingError> {
    spec.validate()?;
    let jobs: Vec<(ClassLabel, usize)> =
        ClassLabel::ALL.iter().flat_map(|&c| (0..spec.images_per_class).map(move |i| (c, i))).collect();
    Ok(par::map_slice(&jobs, |&(c, i)| render(spec, c, i)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec { images_per_class: 2, width: 64, height: 48, ..SyntheticSpec::default() }
    }

    #[test]
    fn counts_and_labels() {
        let imgs = generate(&small()).unwrap();
        assert_eq!(imgs.len(), 8);
        for (k, class) in ClassLabel::ALL.iter().enumerate() {
            assert!(imgs[2 * k..2 * k + 2].iter().all(|im| im.label == *class));
        }
        assert_eq!(imgs[0].raster.width(), 64);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.raster == y.raster));
        let c = generate(&SyntheticSpec { seed: 1, ..small() }).unwrap();
        assert!(a.iter().zip(&c).any(|(x, y)| x.raster != y.raster));
    }

    #[test]
    fn rejects_empty_spec() {
        let spec = SyntheticSpec { images_per_class: 0, ..SyntheticSpec::default() };
        assert!(matches!(generate(&spec), Err(ImagingError::InvalidSpec(_))));
    }
}
