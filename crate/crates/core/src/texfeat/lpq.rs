//! Local phase quantisation.
//!
//! For every interior pixel the short-term Fourier transform over a
//! `win x win` Gaussian-weighted neighbourhood is evaluated at the four
//! lowest non-zero frequencies `(0, a)`, `(a, 0)`, `(a, a)`, `(a, -a)` with
//! `a = 1 / win` (as `(row, col)` frequency pairs). The signs of the four
//! real and four imaginary parts form an 8-bit code with bit order
//! `Re u1, Im u1, Re u2, Im u2, ..., Im u4`; a part sets its bit when it is
//! positive. Parts within [`ZERO_TOLERANCE`] of zero count as zero: on 8-bit
//! images exact cancellations are common, and their sign would otherwise be
//! decided by round-off.
//!
//! Filters are separable products of 1-D filters. Complex 1-D filters are
//! shifted to zero mean, so flat regions give all-zero responses.
//!
//! The rotation-invariant variant first estimates a characteristic
//! orientation per pixel from the signs of the imaginary STFT parts at
//! `ORIENTATION_SAMPLES` frequencies on a circle of radius `a`, then
//! evaluates the same four frequencies rotated into that orientation using a
//! bank of precomputed filters over a circular neighbourhood.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{require_size, Descriptor, FeatureVector, TexError};
use crate::imaging::GrayImage;

pub const LPQ_WINDOW: usize = 3;
pub const RLPQ_WINDOW: usize = 7;
/// Frequencies sampled on the circle for orientation estimation (multiple of 4).
const ORIENTATION_SAMPLES: usize = 16;
/// Magnitude (in intensity units) below which a filter response is zero.
pub const ZERO_TOLERANCE: f64 = 1e-9;
/// Quantised orientations for which rotated filter banks are precomputed.
const ORIENTATION_BINS: usize = 36;

fn check_window(img: &GrayImage, win: usize, name: &'static str) -> Result<(), TexError> {
    if win < 3 || win % 2 == 0 {
        return Err(TexError::Parameter(format!("window must be odd and >= 3, got {win}")));
    }
    require_size(img, win, name)
}

/// Gaussian window width used by both variants.
pub(crate) fn window_sigma(win: usize) -> f64 {
    win as f64 / 4.0
}

/// 1-D filters `(w0, w1)`: Gaussian window, and the window modulated by
/// `exp(-2 pi i a x)` then shifted to zero mean. `w2` is `conj(w1)`.
pub(crate) fn lpq_filters_1d(win: usize) -> (Vec<f64>, Vec<Complex64>) {
    let r = (win / 2) as isize;
    let sigma = window_sigma(win);
    let a = 1.0 / win as f64;
    let xs: Vec<f64> = (-r..=r).map(|x| x as f64).collect();
    let w0: Vec<f64> = xs.iter().map(|x| (-0.5 * (x / sigma).powi(2)).exp()).collect();
    let mut w1: Vec<Complex64> =
        xs.iter().zip(&w0).map(|(x, g)| Complex64::from_polar(*g, -2.0 * PI * a * x)).collect();
    let mean = w1.iter().sum::<Complex64>() / win as f64;
    w1.iter_mut().for_each(|v| *v -= mean);
    (w0, w1)
}

fn code_from_parts(parts: [f64; 8]) -> u8 {
    parts.iter().enumerate().fold(0u8, |acc, (i, &v)| acc | (((v > ZERO_TOLERANCE) as u8) << i))
}

/// Codes of all interior pixels (row-major) of the `(H - win + 1) x (W - win + 1)` valid region.
pub fn lpq_codes(img: &GrayImage, win: usize) -> Result<Vec<u8>, TexError> {
    check_window(img, win, "lpq")?;
    let (w0, w1) = lpq_filters_1d(win);
    let w2: Vec<Complex64> = w1.iter().map(|v| v.conj()).collect();
    let (w, h) = (img.width(), img.height());
    let d = img.as_slice();
    let vh = h - win + 1;
    let ow = w - win + 1;

    // Vertical pass: real Gaussian and complex modulated filter, full width.
    let mut v0 = vec![0.0f64; vh * w];
    let mut v1 = vec![Complex64::new(0.0, 0.0); vh * w];
    for r in 0..vh {
        for (k, (&g, &m)) in w0.iter().zip(&w1).enumerate() {
            let src = &d[(r + k) * w..(r + k + 1) * w];
            let dst0 = &mut v0[r * w..(r + 1) * w];
            for (o, &s) in dst0.iter_mut().zip(src) {
                *o += g * s;
            }
            let dst1 = &mut v1[r * w..(r + 1) * w];
            for (o, &s) in dst1.iter_mut().zip(src) {
                *o += m * s;
            }
        }
    }

    let mut codes = Vec::with_capacity(vh * ow);
    for r in 0..vh {
        let row0 = &v0[r * w..(r + 1) * w];
        let row1 = &v1[r * w..(r + 1) * w];
        for c in 0..ow {
            let mut f1 = Complex64::new(0.0, 0.0);
            let mut f2 = Complex64::new(0.0, 0.0);
            let mut f3 = Complex64::new(0.0, 0.0);
            let mut f4 = Complex64::new(0.0, 0.0);
            for k in 0..win {
                let a0 = row0[c + k];
                let a1 = row1[c + k];
                f1 += w1[k] * a0; // (0, a): Gaussian down the column, modulated along the row
                f2 += a1 * w0[k]; // (a, 0)
                f3 += a1 * w1[k]; // (a, a)
                f4 += a1 * w2[k]; // (a, -a)
            }
            codes.push(code_from_parts([f1.re, f1.im, f2.re, f2.im, f3.re, f3.im, f4.re, f4.im]));
        }
    }
    Ok(codes)
}

pub fn lpq_hist(img: &GrayImage, win: usize) -> Result<FeatureVector, TexError> {
    let mut counts = vec![0u64; 256];
    for code in lpq_codes(img, win)? {
        counts[code as usize] += 1;
    }
    Ok(FeatureVector::histogram(Descriptor::Lpq, &counts))
}

/// Precomputed filters for the rotation-invariant variant.
struct RlpqBank {
    win: usize,
    /// Circular neighbourhood offsets `(dr, dc)`.
    offsets: Vec<(isize, isize)>,
    /// `ORIENTATION_SAMPLES / 2` odd filters giving `Im F(v_i)` for
    /// `phi_i = 2 pi i / ORIENTATION_SAMPLES`; the other half are negations.
    orient: Vec<Vec<f64>>,
    /// Per orientation bin: four complex filters, zero-mean over the support.
    rotated: Vec<[Vec<Complex64>; 4]>,
}

impl RlpqBank {
    fn new(win: usize) -> Self {
        let radius = (win / 2) as isize;
        let r2 = radius * radius;
        let offsets: Vec<(isize, isize)> = (-radius..=radius)
            .flat_map(|dr| (-radius..=radius).map(move |dc| (dr, dc)))
            .filter(|(dr, dc)| dr * dr + dc * dc <= r2)
            .collect();
        let sigma = window_sigma(win);
        let a = 1.0 / win as f64;
        let gauss: Vec<f64> = offsets
            .iter()
            .map(|&(dr, dc)| (-0.5 * ((dr * dr + dc * dc) as f64) / (sigma * sigma)).exp())
            .collect();

        let orient = (0..ORIENTATION_SAMPLES / 2)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / ORIENTATION_SAMPLES as f64;
                let (vr, vc) = (a * phi.cos(), a * phi.sin());
                offsets
                    .iter()
                    .zip(&gauss)
                    .map(|(&(dr, dc), g)| -g * (2.0 * PI * (vr * dr as f64 + vc * dc as f64)).sin())
                    .collect()
            })
            .collect();

        let base = [(0.0, a), (a, 0.0), (a, a), (a, -a)];
        let rotated = (0..ORIENTATION_BINS)
            .map(|b| {
                let theta = 2.0 * PI * b as f64 / ORIENTATION_BINS as f64;
                let (s, c) = theta.sin_cos();
                base.map(|(ur, uc)| {
                    let (fr, fc) = (c * ur - s * uc, s * ur + c * uc);
                    let mut taps: Vec<Complex64> = offsets
                        .iter()
                        .zip(&gauss)
                        .map(|(&(dr, dc), &g)| Complex64::from_polar(g, -2.0 * PI * (fr * dr as f64 + fc * dc as f64)))
                        .collect();
                    let mean = taps.iter().sum::<Complex64>() / taps.len() as f64;
                    taps.iter_mut().for_each(|t| *t -= mean);
                    taps
                })
            })
            .collect();
        Self { win, offsets, orient, rotated }
    }
}

/// Orientation bin in `0..ORIENTATION_BINS` from the signs of `Im F(v_i)`.
fn orientation_bin(half: &[f64]) -> usize {
    let m = ORIENTATION_SAMPLES;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &v) in half.iter().enumerate() {
        let q = if v > ZERO_TOLERANCE {
            1.0
        } else if v < -ZERO_TOLERANCE {
            -1.0
        } else {
            0.0
        };
        let phi = 2.0 * PI * i as f64 / m as f64;
        // Sample i + m/2 has the opposite frequency, so its imaginary part is negated.
        acc += Complex64::from_polar(q, phi) - Complex64::from_polar(q, phi + PI);
    }
    if acc.norm() == 0.0 {
        return 0;
    }
    let angle = acc.arg().rem_euclid(2.0 * PI);
    ((angle / (2.0 * PI) * ORIENTATION_BINS as f64).round() as usize) % ORIENTATION_BINS
}

pub fn rlpq_codes(img: &GrayImage, win: usize) -> Result<Vec<u8>, TexError> {
    check_window(img, win, "rlpq")?;
    let bank = RlpqBank::new(win);
    let (w, h) = (img.width(), img.height());
    let radius = bank.win / 2;
    let (oh, ow) = (h - win + 1, w - win + 1);
    let d = img.as_slice();

    // Orientation filter responses as planes over the valid region.
    let planes: Vec<Vec<f64>> = bank
        .orient
        .iter()
        .map(|filt| {
            let mut plane = vec![0.0; oh * ow];
            for (&(dr, dc), &tap) in bank.offsets.iter().zip(filt) {
                if tap == 0.0 {
                    continue;
                }
                for r in 0..oh {
                    let sr = (r + radius) as isize + dr;
                    let start = sr as usize * w + (radius as isize + dc) as usize;
                    let src = &d[start..start + ow];
                    for (o, &s) in plane[r * ow..(r + 1) * ow].iter_mut().zip(src) {
                        *o += tap * s;
                    }
                }
            }
            plane
        })
        .collect();

    let lin: Vec<isize> = bank.offsets.iter().map(|&(dr, dc)| dr * w as isize + dc).collect();
    let mut half = vec![0.0; bank.orient.len()];
    let mut codes = Vec::with_capacity(oh * ow);
    for r in 0..oh {
        for c in 0..ow {
            let idx = r * ow + c;
            for (hv, p) in half.iter_mut().zip(&planes) {
                *hv = p[idx];
            }
            let filters = &bank.rotated[orientation_bin(&half)];
            let center = ((r + radius) * w + c + radius) as isize;
            let mut parts = [0.0; 8];
            for (k, filt) in filters.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (&off, tap) in lin.iter().zip(filt) {
                    acc += tap * d[(center + off) as usize];
                }
                parts[2 * k] = acc.re;
                parts[2 * k + 1] = acc.im;
            }
            codes.push(code_from_parts(parts));
        }
    }
    Ok(codes)
}

pub fn rlpq_hist(img: &GrayImage, win: usize) -> Result<FeatureVector, TexError> {
    let mut counts = vec![0u64; 256];
    for code in rlpq_codes(img, win)? {
        counts[code as usize] += 1;
    }
    Ok(FeatureVector::histogram(Descriptor::Rlpq, &counts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_single_spike() {
        let img = GrayImage::from_fn(12, 10, |_, _| 93.0);
        for h in [lpq_hist(&img, 3).unwrap(), rlpq_hist(&img, 7).unwrap()] {
            assert_eq!(h.values.iter().filter(|&&v| v > 0.0).count(), 1);
            assert!((h.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        // zero-mean filters: every part is zero up to round-off, so code 0
        assert!(lpq_codes(&img, 3).unwrap().iter().all(|&c| c == 0));
    }

    #[test]
    fn window_validation() {
        let img = GrayImage::from_fn(5, 5, |r, c| (r + c) as f64);
        assert!(lpq_hist(&img, 4).is_err());
        assert!(rlpq_hist(&img, 7).is_err());
    }

    #[test]
    fn orientation_samples_are_symmetric() {
        assert_eq!(ORIENTATION_SAMPLES % 4, 0);
        assert_eq!(ORIENTATION_BINS % 4, 0);
    }
}
