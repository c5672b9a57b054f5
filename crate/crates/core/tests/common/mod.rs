//! Brute-force reference implementations shared by the integration tests.
//! Each one follows the textbook definition directly and shares no code with
//! the library beyond its plain data types.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;

use histocnn::acnn::Map;
use histocnn::imaging::GrayImage;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

// ---------------------------------------------------------------- convolution

/// `out(m, n) = sum_{r, t} map(m + r, n + t) * k(r, t)`.
pub fn conv_valid(map: &[Vec<f64>], k: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (h, w) = (map.len(), map[0].len());
    let (kr, kc) = (k.len(), k[0].len());
    let mut out = vec![vec![0.0; w - kc + 1]; h - kr + 1];
    for m in 0..h - kr + 1 {
        for n in 0..w - kc + 1 {
            let mut s = 0.0;
            for r in 0..kr {
                for t in 0..kc {
                    s += map[m + r][n + t] * k[r][t];
                }
            }
            out[m][n] = s;
        }
    }
    out
}

/// Valid convolution of the map zero-padded by `(kr - 1, kc - 1)` on every side.
pub fn conv_full(map: &[Vec<f64>], k: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (h, w) = (map.len(), map[0].len());
    let (kr, kc) = (k.len(), k[0].len());
    let mut padded = vec![vec![0.0; w + 2 * (kc - 1)]; h + 2 * (kr - 1)];
    for r in 0..h {
        for c in 0..w {
            padded[r + kr - 1][c + kc - 1] = map[r][c];
        }
    }
    conv_valid(&padded, k)
}

pub fn to_rows(m: &Map) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

pub fn random_map(rng: &mut impl Rng, rows: usize, cols: usize) -> Map {
    Map::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

// ---------------------------------------------------------------- images

pub fn random_gray(rng: &mut impl Rng, w: usize, h: usize) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| rng.gen_range(0..=255u8) as f64)
}

fn px(img: &GrayImage, r: isize, c: isize) -> f64 {
    img.get(r as usize, c as usize)
}

// ---------------------------------------------------------------- LBP family

/// Clockwise ring starting at the top-left neighbour.
const RING: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)];

pub fn lbp_code(img: &GrayImage, r: usize, c: usize) -> u8 {
    let center = img.get(r, c);
    let mut code = 0u32;
    for (i, (dr, dc)) in RING.iter().enumerate() {
        if px(img, r as isize + dr, c as isize + dc) >= center {
            code += 1 << i;
        }
    }
    code as u8
}

/// Bits of `code` as a ring, least significant first.
fn bits(code: u8) -> [u8; 8] {
    let mut b = [0u8; 8];
    for (i, v) in b.iter_mut().enumerate() {
        *v = (code >> i) & 1;
    }
    b
}

fn from_bits(b: &[u8; 8]) -> u8 {
    b.iter().enumerate().map(|(i, &v)| (v as u32) << i).sum::<u32>() as u8
}

/// Smallest value over all circular shifts of the ring.
pub fn min_rotation(code: u8) -> u8 {
    let b = bits(code);
    (0..8)
        .map(|s| {
            let mut r = [0u8; 8];
            for i in 0..8 {
                r[i] = b[(i + s) % 8];
            }
            from_bits(&r)
        })
        .min()
        .unwrap()
}

pub fn rlbp_class(code: u8) -> usize {
    let reps: BTreeSet<u8> = (0..=255u8).map(min_rotation).collect();
    reps.iter().position(|&r| r == min_rotation(code)).unwrap()
}

pub fn riu2_bin(code: u8) -> usize {
    let b = bits(code);
    let transitions = (0..8).filter(|&i| b[i] != b[(i + 1) % 8]).count();
    if transitions <= 2 {
        b.iter().map(|&v| v as usize).sum()
    } else {
        9
    }
}

fn normalise(counts: Vec<u64>) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

pub fn lbp_family_hist(img: &GrayImage, bins: usize, map: impl Fn(u8) -> usize) -> Vec<f64> {
    let mut counts = vec![0u64; bins];
    for r in 1..img.height() - 1 {
        for c in 1..img.width() - 1 {
            counts[map(lbp_code(img, r, c))] += 1;
        }
    }
    normalise(counts)
}

pub fn lbp_hist(img: &GrayImage) -> Vec<f64> {
    lbp_family_hist(img, 256, |c| c as usize)
}

pub fn rlbp_hist(img: &GrayImage) -> Vec<f64> {
    let table: Vec<usize> = (0..=255u8).map(rlbp_class).collect();
    lbp_family_hist(img, 36, |c| table[c as usize])
}

pub fn urlbp_hist(img: &GrayImage) -> Vec<f64> {
    lbp_family_hist(img, 10, riu2_bin)
}

// ---------------------------------------------------------------- LPQ

/// Direct 2-D short-term Fourier coefficients over a `win x win` window with
/// Gaussian weighting (sigma = win / 4) and zero-mean modulated 1-D factors.
/// A part sets its bit when it exceeds `zero`.
pub fn lpq_hist(img: &GrayImage, win: usize, zero: f64) -> Vec<f64> {
    let r = (win / 2) as isize;
    let sigma = win as f64 / 4.0;
    let a = 1.0 / win as f64;
    let g: Vec<f64> = (-r..=r).map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let raw: Vec<Complex64> =
        (-r..=r).zip(&g).map(|(x, &gx)| gx * Complex64::new(0.0, -2.0 * PI * a * x as f64).exp()).collect();
    let mean: Complex64 = raw.iter().sum::<Complex64>() / win as f64;
    let m: Vec<Complex64> = raw.iter().map(|v| v - mean).collect();
    let one = |i: usize| Complex64::new(g[i], 0.0);

    // (row factor, column factor) for (0,a), (a,0), (a,a), (a,-a).
    let filters: [Box<dyn Fn(usize, usize) -> Complex64>; 4] = [
        Box::new(|i, j| one(i) * m[j]),
        Box::new(|i, j| m[i] * one(j)),
        Box::new(|i, j| m[i] * m[j]),
        Box::new(|i, j| m[i] * m[j].conj()),
    ];

    let mut counts = vec![0u64; 256];
    for y in 0..=img.height() - win {
        for x in 0..=img.width() - win {
            let mut code = 0usize;
            for (k, f) in filters.iter().enumerate() {
                let mut s = Complex64::new(0.0, 0.0);
                for i in 0..win {
                    for j in 0..win {
                        s += f(i, j) * img.get(y + i, x + j);
                    }
                }
                if s.re > zero {
                    code |= 1 << (2 * k);
                }
                if s.im > zero {
                    code |= 1 << (2 * k + 1);
                }
            }
            counts[code] += 1;
        }
    }
    normalise(counts)
}

// ---------------------------------------------------------------- GLCM

/// Contrast, correlation, energy, homogeneity averaged over the four
/// directions 0, 45, 90, 135 degrees at distance 1, symmetric counts.
pub fn haralick(img: &GrayImage, levels: usize) -> [f64; 4] {
    let q = |v: f64| ((v * levels as f64 / 256.0).floor() as usize).min(levels - 1);
    let dirs = [(0isize, 1isize), (-1, 1), (-1, 0), (-1, -1)];
    let mut acc = [0.0; 4];
    for (dr, dc) in dirs {
        let mut counts: HashMap<(usize, usize), f64> = HashMap::new();
        let mut total = 0.0;
        for r in 0..img.height() as isize {
            for c in 0..img.width() as isize {
                let (r2, c2) = (r + dr, c + dc);
                if r2 < 0 || c2 < 0 || r2 >= img.height() as isize || c2 >= img.width() as isize {
                    continue;
                }
                let a = q(px(img, r, c));
                let b = q(px(img, r2, c2));
                *counts.entry((a, b)).or_default() += 1.0;
                *counts.entry((b, a)).or_default() += 1.0;
                total += 2.0;
            }
        }
        let p: Vec<((f64, f64), f64)> =
            counts.into_iter().map(|((i, j), n)| ((i as f64, j as f64), n / total)).collect();
        let mu_i: f64 = p.iter().map(|((i, _), v)| i * v).sum();
        let mu_j: f64 = p.iter().map(|((_, j), v)| j * v).sum();
        let sd_i = p.iter().map(|((i, _), v)| (i - mu_i).powi(2) * v).sum::<f64>().sqrt();
        let sd_j = p.iter().map(|((_, j), v)| (j - mu_j).powi(2) * v).sum::<f64>().sqrt();
        let cov: f64 = p.iter().map(|((i, j), v)| (i - mu_i) * (j - mu_j) * v).sum();
        acc[0] += p.iter().map(|((i, j), v)| (i - j).powi(2) * v).sum::<f64>();
        acc[1] += if sd_i * sd_j == 0.0 { 1.0 } else { cov / (sd_i * sd_j) };
        acc[2] += p.iter().map(|(_, v)| v * v).sum::<f64>();
        acc[3] += p.iter().map(|((i, j), v)| v / (1.0 + (i - j).abs())).sum::<f64>();
    }
    acc.map(|v| v / 4.0)
}

// ---------------------------------------------------------------- SVM dual

/// Dual objective `sum a - 1/2 sum a_i a_j y_i y_j K_ij`.
pub fn dual_objective(k: &DMatrix<f64>, y: &[f64], a: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += a[i] * a[j] * y[i] * y[j] * k[(i, j)];
        }
    }
    a.iter().sum::<f64>() - 0.5 * quad
}

/// Exact dual optimum by enumerating every assignment of each multiplier to
/// `{0, C, free}`. For the free set the stationarity conditions
/// `(Q a)_i + b y_i = 1` with `y'a = 0` form a linear system solved by SVD;
/// candidates that satisfy it and the box constraints are scored and the
/// best objective is returned. Only usable for a handful of points.
pub fn brute_force_dual(k: &DMatrix<f64>, y: &[f64], c: f64) -> (f64, Vec<f64>) {
    let n = y.len();
    assert!(n <= 8, "3^n enumeration");
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[(i, j)]);
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    for mut state in 0..3usize.pow(n as u32) {
        let mut kind = vec![0u8; n]; // 0 lower, 1 upper, 2 free
        for v in kind.iter_mut() {
            *v = (state % 3) as u8;
            state /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| kind[i] == 2).collect();
        let mut a: Vec<f64> = kind.iter().map(|&t| if t == 1 { c } else { 0.0 }).collect();
        let m = free.len();
        if m > 0 {
            let mut sys = DMatrix::zeros(m + 1, m + 1);
            let mut rhs = DVector::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    sys[(r, s)] = q[(i, j)];
                }
                sys[(r, m)] = y[i];
                sys[(m, r)] = y[i];
                let fixed: f64 = (0..n).filter(|&j| kind[j] != 2).map(|j| q[(i, j)] * a[j]).sum();
                rhs[r] = 1.0 - fixed;
            }
            rhs[m] = -(0..n).filter(|&j| kind[j] != 2).map(|j| y[j] * a[j]).sum::<f64>();
            let svd = sys.clone().svd(true, true);
            let Ok(sol) = svd.solve(&rhs, 1e-12) else { continue };
            if (&sys * &sol - &rhs).amax() > 1e-8 {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                a[i] = sol[r];
            }
        }
        let feasible = a.iter().all(|&v| (-1e-9..=c + 1e-9).contains(&v))
            && y.iter().zip(&a).map(|(yi, ai)| yi * ai).sum::<f64>().abs() < 1e-8;
        if !feasible {
            continue;
        }
        let w = dual_objective(k, y, &a);
        if w > best.0 {
            best = (w, a);
        }
    }
    best
}

/// Largest violation of the soft-margin KKT conditions:
/// `a = 0 => y f >= 1`, `0 < a < C => y f = 1`, `a = C => y f <= 1`.
pub fn kkt_violation(k: &DMatrix<f64>, y: &[f64], alpha: &[f64], b: f64, c: f64) -> f64 {
    let n = y.len();
    let bound_eps = 1e-12 * c.max(1.0);
    let mut worst = 0.0f64;
    for i in 0..n {
        let f: f64 = (0..n).map(|j| alpha[j] * y[j] * k[(i, j)]).sum::<f64>() + b;
        let margin = y[i] * f;
        let v = if alpha[i] <= bound_eps {
            (1.0 - margin).max(0.0)
        } else if alpha[i] >= c - bound_eps {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

pub fn kernel_matrix(x: &[Vec<f64>], kernel: impl Fn(&[f64], &[f64]) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), x.len(), |i, j| kernel(&x[i], &x[j]))
}

pub fn rbf(gamma: f64) -> impl Fn(&[f64], &[f64]) -> f64 {
    move |u, v| (-gamma * u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).exp()
}

pub fn poly(degree: i32, gamma: f64, coef0: f64) -> impl Fn(&[f64], &[f64]) -> f64 {
    move |u, v| (gamma * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() + coef0).powi(degree)
}

pub fn linear(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

// ---------------------------------------------------------------- metrics

/// Detection metrics with cancer (classes 1..4) as the positive class:
/// `(accuracy, sensitivity, specificity, precision)`.
pub fn detection(cm: &[[u64; 4]; 4]) -> (Option<f64>, Option<f64>, Option<f64>, Option<f64>) {
    let (mut tp, mut tn, mut fp, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for (t, row) in cm.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            match (t == 0, p == 0) {
                (true, true) => tn += n,
                (true, false) => fp += n,
                (false, true) => fn_ += n,
                (false, false) => tp += n,
            }
        }
    }
    let div = |a: u64, b: u64| if b == 0 { None } else { Some(a as f64 / b as f64) };
    (div(tp + tn, tp + tn + fp + fn_), div(tp, tp + fn_), div(tn, tn + fp), div(tp, tp + fp))
}
