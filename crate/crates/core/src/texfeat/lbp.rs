//! 8-neighbour local binary patterns.
//!
//! Neighbour `i` sets bit `i` when its value is >= the centre. Neighbours are
//! visited clockwise starting at the top-left:
//!
//! ```text
//! 0 1 2
//! 7 c 3
//! 6 5 4
//! ```
//!
//! A 90 degree rotation of the image moves every neighbour two positions
//! round this ring, i.e. rotates the code by two bits.

use std::sync::OnceLock;

use super::{require_size, Descriptor, FeatureVector, TexError};
use crate::imaging::GrayImage;

/// `(row, col)` offsets of bits 0..8.
pub const LBP_OFFSETS: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)];

/// Codes of all interior pixels, row-major.
pub fn lbp_codes(img: &GrayImage) -> Result<Vec<u8>, TexError> {
    require_size(img, 3, "lbp")?;
    let (w, h) = (img.width(), img.height());
    let d = img.as_slice();
    let mut codes = Vec::with_capacity((w - 2) * (h - 2));
    for r in 1..h - 1 {
        for c in 1..w - 1 {
            let center = d[r * w + c];
            let mut code = 0u8;
            for (bit, &(dr, dc)) in LBP_OFFSETS.iter().enumerate() {
                let v = d[(r as isize + dr) as usize * w + (c as isize + dc) as usize];
                code |= ((v >= center) as u8) << bit;
            }
            codes.push(code);
        }
    }
    Ok(codes)
}

fn histogram(img: &GrayImage, bins: usize, descriptor: Descriptor, map: impl Fn(u8) -> usize) -> Result<FeatureVector, TexError> {
    let mut counts = vec![0u64; bins];
    for code in lbp_codes(img)? {
        counts[map(code)] += 1;
    }
    Ok(FeatureVector::histogram(descriptor, &counts))
}

pub fn lbp_hist(img: &GrayImage) -> Result<FeatureVector, TexError> {
    histogram(img, 256, Descriptor::Lbp, |c| c as usize)
}

fn min_rotation(code: u8) -> u8 {
    (0..8).map(|s| code.rotate_right(s)).min().unwrap()
}

/// `code -> rotation class index` (36 classes, ordered by their minimal code).
fn rlbp_table() -> &'static [u8; 256] {
    static TABLE: OnceLock<[u8; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut reps: Vec<u8> = (0..=255u8).map(min_rotation).collect();
        reps.sort_unstable();
        reps.dedup();
        let mut t = [0u8; 256];
        for code in 0..=255u8 {
            t[code as usize] = reps.binary_search(&min_rotation(code)).unwrap() as u8;
        }
        t
    })
}

/// Rotation-invariant class of an 8-bit code, in `0..36`.
pub fn rlbp_class(code: u8) -> usize {
    rlbp_table()[code as usize] as usize
}

/// Uniform rotation-invariant bin: popcount for codes with at most two
/// circular 0/1 transitions, 9 otherwise.
pub fn riu2_bin(code: u8) -> usize {
    let transitions = (code ^ code.rotate_right(1)).count_ones();
    if transitions <= 2 {
        code.count_ones() as usize
    } else {
        9
    }
}

pub fn rlbp_hist(img: &GrayImage) -> Result<FeatureVector, TexError> {
    histogram(img, 36, Descriptor::Rlbp, rlbp_class)
}

pub fn urlbp_hist(img: &GrayImage) -> Result<FeatureVector, TexError> {
    histogram(img, 10, Descriptor::Urlbp, riu2_bin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_is_all_ones_code() {
        let img = GrayImage::from_fn(6, 5, |_, _| 42.0);
        let h = lbp_hist(&img).unwrap();
        assert_eq!(h.values[255], 1.0);
        assert_eq!(h.values.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn bright_center_is_zero_code() {
        let img = GrayImage::from_fn(3, 3, |r, c| if (r, c) == (1, 1) { 200.0 } else { 10.0 });
        assert_eq!(lbp_codes(&img).unwrap(), vec![0]);
    }

    #[test]
    fn bit_order() {
        // only the top-left neighbour is bright
        let img = GrayImage::from_fn(3, 3, |r, c| if (r, c) == (0, 0) { 9.0 } else if (r, c) == (1, 1) { 5.0 } else { 1.0 });
        assert_eq!(lbp_codes(&img).unwrap(), vec![0b0000_0001]);
        let img = GrayImage::from_fn(3, 3, |r, c| if (r, c) == (1, 0) { 9.0 } else if (r, c) == (1, 1) { 5.0 } else { 1.0 });
        assert_eq!(lbp_codes(&img).unwrap(), vec![0b1000_0000]);
    }

    #[test]
    fn rotation_classes() {
        assert_eq!(rlbp_class(0b0000_0001), rlbp_class(0b0001_0000));
        assert_eq!(riu2_bin(0b0101_0101), 9);
        assert_eq!(riu2_bin(0b0011_1000), 3);
        assert_eq!(riu2_bin(0), 0);
        assert_eq!(riu2_bin(255), 8);
        let rl: std::collections::HashSet<_> = (0..=255u8).map(rlbp_class).collect();
        let ur: std::collections::HashSet<_> = (0..=255u8).map(riu2_bin).collect();
        assert_eq!(rl.len(), 36);
        assert_eq!(ur.len(), 10);
        assert_eq!(rl.iter().max(), Some(&35));
    }

    #[test]
    fn too_small() {
        assert!(lbp_hist(&GrayImage::from_fn(2, 5, |_, _| 0.0)).is_err());
    }
}
