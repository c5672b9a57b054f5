//! Dense row-major 2-D maps and the convolution / pooling primitives used by
//! the CNN layers.
//!
//! Convolutions use the correlation form
//! `out(m, n) = sum_{r,t} kernel(r, t) * map(m + r, n + t)`.

use serde::{Deserialize, Serialize};

use super::AcnnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Map {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Map {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, v: f64) -> Self {
        Self { rows, cols, data: vec![v; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, AcnnError> {
        if data.len() != rows * cols {
            return Err(AcnnError::Shape(format!("{} values for a {rows}x{cols} map", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Map {
        Map { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// 180 degree rotation: `(r, c) -> (rows - 1 - r, cols - 1 - c)`.
    pub fn rot180(&self) -> Map {
        let mut data = self.data.clone();
        data.reverse();
        Map { rows: self.rows, cols: self.cols, data }
    }

    /// Surrounds the map with `pr` zero rows and `pc` zero columns on each side.
    pub fn zero_pad(&self, pr: usize, pc: usize) -> Map {
        let mut out = Map::zeros(self.rows + 2 * pr, self.cols + 2 * pc);
        for r in 0..self.rows {
            let start = (r + pr) * out.cols + pc;
            out.data[start..start + self.cols].copy_from_slice(self.row(r));
        }
        out
    }
}

#[inline(always)]
fn axpy(dst: &mut [f64], a: f64, src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += a * s;
    }
}

/// Valid (no zero padding) convolution; output is `(H - Kr + 1) x (W - Kc + 1)`.
pub fn conv2d_valid(map: &Map, kernel: &Map) -> Result<Map, AcnnError> {
    if kernel.rows > map.rows || kernel.cols > map.cols || kernel.is_empty() {
        return Err(AcnnError::Shape(format!(
            "kernel {}x{} does not fit map {}x{}",
            kernel.rows, kernel.cols, map.rows, map.cols
        )));
    }
    let mut out = Map::zeros(map.rows - kernel.rows + 1, map.cols - kernel.cols + 1);
    conv_valid_acc(&mut out, map, kernel.as_slice(), kernel.rows, kernel.cols);
    Ok(out)
}

/// `out += conv2d_valid(map, kernel)` with the kernel given as a flat row-major slice.
pub(crate) fn conv_valid_acc(out: &mut Map, map: &Map, kernel: &[f64], kr: usize, kc: usize) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports the enabled features.
        return unsafe { conv_valid_acc_avx2(out, map, kernel, kr, kc) };
    }
    conv_valid_acc_impl(out, map, kernel, kr, kc)
}

// Same code compiled with wider vectors. No fused multiply-add is enabled,
// so results are bit-identical to the generic path.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx,avx2")]
unsafe fn conv_valid_acc_avx2(out: &mut Map, map: &Map, kernel: &[f64], kr: usize, kc: usize) {
    conv_valid_acc_impl(out, map, kernel, kr, kc)
}

#[inline(always)]
fn conv_valid_acc_impl(out: &mut Map, map: &Map, kernel: &[f64], kr: usize, kc: usize) {
    debug_assert_eq!(out.rows, map.rows - kr + 1);
    debug_assert_eq!(out.cols, map.cols - kc + 1);
    let ow = out.cols;
    if ow < kc {
        // Small output, large kernel (weight sensitivities): each output is a
        // long correlation. Up to eight neighbouring outputs share each kernel
        // load and keep independent partial sums.
        for m in 0..out.rows {
            for r in 0..kr {
                let krow = &kernel[r * kc..(r + 1) * kc];
                let src = map.row(m + r);
                let dst = &mut out.data[m * ow..(m + 1) * ow];
                let mut n = 0;
                while n + 8 <= ow {
                    multi_dot::<8>(krow, src, n, &mut dst[n..n + 8]);
                    n += 8;
                }
                let rest = &mut dst[n..];
                match rest.len() {
                    0 => {}
                    1 => multi_dot::<1>(krow, src, n, rest),
                    2 => multi_dot::<2>(krow, src, n, rest),
                    3 => multi_dot::<3>(krow, src, n, rest),
                    4 => multi_dot::<4>(krow, src, n, rest),
                    5 => multi_dot::<5>(krow, src, n, rest),
                    6 => multi_dot::<6>(krow, src, n, rest),
                    _ => multi_dot::<7>(krow, src, n, rest),
                }
            }
        }
        return;
    }
    // Register-blocked: a strip of outputs stays in registers across all
    // taps. Each output still accumulates in (r, t) order.
    for m in 0..out.rows {
        let rows = &map.data[m * map.cols..(m + kr) * map.cols];
        let dst = &mut out.data[m * ow..(m + 1) * ow];
        let mut n = 0;
        while n + 16 <= ow {
            strip::<16>(&mut dst[n..n + 16], rows, map.cols, kernel, kc, n);
            n += 16;
        }
        while n + 4 <= ow {
            strip::<4>(&mut dst[n..n + 4], rows, map.cols, kernel, kc, n);
            n += 4;
        }
        while n < ow {
            strip::<1>(&mut dst[n..n + 1], rows, map.cols, kernel, kc, n);
            n += 1;
        }
    }
}

/// `out[j] += sum_i kern[i] * src[n0 + j + i]` for `j < B`.
#[inline(always)]
fn multi_dot<const B: usize>(kern: &[f64], src: &[f64], n0: usize, out: &mut [f64]) {
    let len = kern.len();
    let src = &src[n0..n0 + B - 1 + len];
    let mut acc = [[0.0f64; 4]; B];
    let wide = len - len % 4;
    for (c, kv) in kern[..wide].chunks_exact(4).enumerate() {
        let window = &src[4 * c..4 * c + B + 3];
        for (j, a) in acc.iter_mut().enumerate() {
            for l in 0..4 {
                a[l] += kv[l] * window[j + l];
            }
        }
    }
    for (j, a) in acc.iter().enumerate() {
        let mut t = (a[0] + a[1]) + (a[2] + a[3]);
        for i in wide..len {
            t += kern[i] * src[i + j];
        }
        out[j] += t;
    }
}

#[inline(always)]
fn strip<const W: usize>(dst: &mut [f64], rows: &[f64], stride: usize, kernel: &[f64], kc: usize, n: usize) {
    let mut acc = [0.0f64; W];
    acc.copy_from_slice(dst);
    for (r, row) in rows.chunks_exact(stride).enumerate() {
        let src = &row[n..n + W + kc - 1];
        for (t, &a) in kernel[r * kc..(r + 1) * kc].iter().enumerate() {
            let s: &[f64; W] = src[t..t + W].try_into().unwrap();
            for i in 0..W {
                acc[i] += a * s[i];
            }
        }
    }
    dst.copy_from_slice(&acc);
}

/// Full convolution: zero-pads `map` by `(Kr - 1, Kc - 1)` on every side and
/// applies [`conv2d_valid`] with `kernel` as given. Output is
/// `(H + Kr - 1) x (W + Kc - 1)`. Backpropagation through a valid
/// convolution passes the 180-degree-rotated forward kernel here.
pub fn conv2d_full(map: &Map, kernel: &Map) -> Result<Map, AcnnError> {
    if map.is_empty() || kernel.is_empty() {
        return Err(AcnnError::Shape("empty map or kernel".into()));
    }
    let (kr, kc) = kernel.dims();
    let mut out = Map::zeros(map.rows + kr - 1, map.cols + kc - 1);
    // out(p, q) = sum kernel(r, t) * map(p + r - kr + 1, q + t - kc + 1); scatter each map row.
    let (oh, ow) = out.dims();
    for p in 0..oh {
        let dst = &mut out.data[p * ow..(p + 1) * ow];
        for r in 0..kr {
            let i = p + r;
            if i < kr - 1 || i - (kr - 1) >= map.rows {
                continue;
            }
            let src = map.row(i - (kr - 1));
            for t in 0..kc {
                // columns q with q + t - (kc - 1) in [0, cols): q in [kc - 1 - t, kc - 1 - t + cols)
                let q0 = kc - 1 - t;
                axpy(&mut dst[q0..q0 + map.cols], kernel.get(r, t), src);
            }
        }
    }
    Ok(out)
}

/// Adjoint of [`conv_valid_acc`]: `out += conv2d_full(delta, rot180(kernel))`.
/// `padded` is `delta` zero-padded by `(kr - 1, kc - 1)`, so callers that
/// reuse one delta against many kernels pad it once.
pub(crate) fn conv_transpose_acc(out: &mut Map, padded: &Map, kernel: &[f64], kr: usize, kc: usize) {
    let flipped: Vec<f64> = kernel.iter().rev().copied().collect();
    conv_valid_acc(out, padded, &flipped, kr, kc);
}

/// Output dimensions of pooling `dims` by `(sr, sc)`; trailing rows/columns
/// that do not fill a whole block are dropped.
pub fn pooled_dims(dims: (usize, usize), sr: usize, sc: usize) -> (usize, usize) {
    (dims.0 / sr, dims.1 / sc)
}

/// Non-overlapping `sr x sc` block means.
pub fn avg_pool(map: &Map, sr: usize, sc: usize) -> Map {
    let (pr, pc) = pooled_dims(map.dims(), sr, sc);
    let scale = 1.0 / (sr * sc) as f64;
    let mut out = Map::zeros(pr, pc);
    for i in 0..pr {
        for r in i * sr..(i + 1) * sr {
            let row = map.row(r);
            for j in 0..pc {
                out.data[i * pc + j] += row[j * sc..(j + 1) * sc].iter().sum::<f64>();
            }
        }
    }
    out.data.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Non-overlapping `sr x sc` block maxima, with the flat index of each
/// block's winner in `map` (first occurrence on ties).
pub fn max_pool(map: &Map, sr: usize, sc: usize) -> (Map, Vec<usize>) {
    let (pr, pc) = pooled_dims(map.dims(), sr, sc);
    let mut out = Map::zeros(pr, pc);
    let mut arg = vec![0usize; pr * pc];
    for i in 0..pr {
        for j in 0..pc {
            let mut best = f64::NEG_INFINITY;
            let mut best_idx = 0;
            for r in i * sr..(i + 1) * sr {
                for c in j * sc..(j + 1) * sc {
                    let v = map.get(r, c);
                    if v > best {
                        best = v;
                        best_idx = r * map.cols + c;
                    }
                }
            }
            out.data[i * pc + j] = best;
            arg[i * pc + j] = best_idx;
        }
    }
    (out, arg)
}

/// Zero-order upsampling of `pooled` onto a `dims` grid, scaled by `beta`.
/// Cells outside the pooled blocks (edge trim) receive zero.
pub fn upsample(pooled: &Map, sr: usize, sc: usize, dims: (usize, usize), beta: f64) -> Map {
    let mut out = Map::zeros(dims.0, dims.1);
    for i in 0..pooled.rows {
        for r in i * sr..(i + 1) * sr {
            for j in 0..pooled.cols {
                let v = pooled.get(i, j) * beta;
                let base = r * dims.1 + j * sc;
                out.data[base..base + sc].iter_mut().for_each(|x| *x = v);
            }
        }
    }
    out
}

/// Routes each pooled value to its recorded argmax position only.
pub fn unpool_max(pooled: &Map, argmax: &[usize], dims: (usize, usize)) -> Map {
    let mut out = Map::zeros(dims.0, dims.1);
    for (v, &idx) in pooled.as_slice().iter().zip(argmax) {
        out.data[idx] += v;
    }
    out
}
