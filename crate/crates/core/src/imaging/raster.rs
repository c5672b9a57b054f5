use super::ImagingError;

/// Interleaved 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImagingError> {
        let expected = width * height * 3;
        if data.len() != expected {
            return Err(ImagingError::BufferSize { expected, actual: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self { width, height, data }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for r in 0..height {
            for c in 0..width {
                data.extend_from_slice(&f(r, c));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        let i = (row * self.width + col) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Copies the `size`x`size` window whose top-left corner is `(row, col)`.
    pub fn crop_square(&self, row: usize, col: usize, size: usize) -> RgbImage {
        assert!(row + size <= self.height && col + size <= self.width, "crop out of bounds");
        let mut data = Vec::with_capacity(size * size * 3);
        for r in row..row + size {
            let start = (r * self.width + col) * 3;
            data.extend_from_slice(&self.data[start..start + size * 3]);
        }
        RgbImage { width: size, height: size, data }
    }
}

/// Single-channel real-valued image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Result<Self, ImagingError> {
        if data.len() != width * height {
            return Err(ImagingError::BufferSize { expected: width * height, actual: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Rotates by 90 degrees clockwise: `(r, c)` moves to `(c, height - 1 - r)`.
    pub fn rot90(&self) -> GrayImage {
        let (w, h) = (self.width, self.height);
        GrayImage::from_fn(h, w, |r, c| self.get(h - 1 - c, r))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GrayImage {
        GrayImage { width: self.width, height: self.height, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buffer_size_checked() {
        assert!(RgbImage::from_raw(2, 2, vec![0; 11]).is_err());
        assert!(RgbImage::from_raw(2, 2, vec![0; 12]).is_ok());
        assert!(GrayImage::from_raw(3, 2, vec![0.0; 5]).is_err());
    }

    #[test]
    fn gray_rot90_moves_pixels_clockwise() {
        let g = GrayImage::from_fn(3, 2, |r, c| (r * 10 + c) as f64);
        let r = g.rot90();
        assert_eq!((r.width(), r.height()), (2, 3));
        // (0,0) -> (0, 1)
        assert_eq!(r.get(0, 1), 0.0);
        // (1,2) -> (2, 0)
        assert_eq!(r.get(2, 0), 12.0);
    }

    #[test]
    fn crop() {
        let img = RgbImage::from_fn(5, 4, |r, c| [r as u8, c as u8, 0]);
        let p = img.crop_square(1, 2, 3);
        assert_eq!(p.pixel(0, 0), [1, 2, 0]);
        assert_eq!(p.pixel(2, 2), [3, 4, 0]);
    }
}
