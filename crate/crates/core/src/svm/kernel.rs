use serde::{Deserialize, Serialize};

use super::SvmError;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Polynomial { degree: u32, gamma: f64, coef0: f64 },
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub const DEFAULT_DEGREE: u32 = 3;

    pub fn poly(degree: u32, gamma: f64, coef0: f64) -> Self {
        KernelSpec::Polynomial { degree, gamma, coef0 }
    }

    pub fn rbf(gamma: f64) -> Self {
        KernelSpec::Rbf { gamma }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Polynomial { .. } => "poly",
            KernelSpec::Rbf { .. } => "rbf",
        }
    }

    pub(crate) fn id(&self) -> u8 {
        match self {
            KernelSpec::Linear => 0,
            KernelSpec::Polynomial { .. } => 1,
            KernelSpec::Rbf { .. } => 2,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            KernelSpec::Linear => None,
            KernelSpec::Polynomial { gamma, .. } | KernelSpec::Rbf { gamma } => Some(gamma),
        }
    }

    /// Same kernel with `gamma` replaced; linear kernels are returned unchanged.
    pub fn with_gamma(self, g: f64) -> Self {
        match self {
            KernelSpec::Linear => KernelSpec::Linear,
            KernelSpec::Polynomial { degree, coef0, .. } => KernelSpec::Polynomial { degree, gamma: g, coef0 },
            KernelSpec::Rbf { .. } => KernelSpec::Rbf { gamma: g },
        }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Polynomial { degree, gamma, coef0 } => {
                if degree == 0 || !(gamma > 0.0) || !gamma.is_finite() || !coef0.is_finite() || coef0 < 0.0 {
                    return Err(SvmError::Parameter(format!(
                        "polynomial kernel needs degree >= 1, gamma > 0, coef0 >= 0 (got {degree}, {gamma}, {coef0})"
                    )));
                }
                Ok(())
            }
            KernelSpec::Rbf { gamma } => {
                if !(gamma > 0.0) || !gamma.is_finite() {
                    return Err(SvmError::Parameter(format!("rbf kernel needs gamma > 0, got {gamma}")));
                }
                Ok(())
            }
        }
    }

    /// Kernel value from the dot product and squared norms of the two inputs.
    pub fn from_dot(&self, dot: f64, norm_u: f64, norm_v: f64) -> f64 {
        match *self {
            KernelSpec::Linear => dot,
            KernelSpec::Polynomial { degree, gamma, coef0 } => (gamma * dot + coef0).powi(degree as i32),
            KernelSpec::Rbf { gamma } => (-gamma * (norm_u + norm_v - 2.0 * dot).max(0.0)).exp(),
        }
    }

    pub(crate) fn eval_unchecked(&self, u: &[f64], v: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(u, v),
            KernelSpec::Polynomial { degree, gamma, coef0 } => (gamma * dot(u, v) + coef0).powi(degree as i32),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Polynomial { degree, gamma, coef0 } => {
                write!(f, "poly(degree={degree}, gamma={gamma}, coef0={coef0})")
            }
            KernelSpec::Rbf { gamma } => write!(f, "rbf(gamma={gamma})"),
        }
    }
}

/// Parses `linear`, `poly`/`polynomial` or `rbf` with default parameters
/// (gamma 1, degree 3, coef0 0).
impl std::str::FromStr for KernelSpec {
    type Err = SvmError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelSpec::Linear),
            "poly" | "polynomial" => Ok(KernelSpec::poly(Self::DEFAULT_DEGREE, 1.0, 0.0)),
            "rbf" => Ok(KernelSpec::rbf(1.0)),
            _ => Err(SvmError::Parameter(format!("unknown kernel `{s}` (expected linear, poly or rbf)"))),
        }
    }
}

pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn kernel_eval(spec: &KernelSpec, u: &[f64], v: &[f64]) -> Result<f64, SvmError> {
    if u.len() != v.len() {
        return Err(SvmError::LengthMismatch { expected: u.len(), found: v.len() });
    }
    Ok(spec.eval_unchecked(u, v))
}

/// Dense matrix of pairwise dot products. Every supported kernel is a
/// function of `u·v`, `|u|²` and `|v|²`, so one Gram matrix serves all
/// kernels and parameter settings over the same data.
#[derive(Debug, Clone)]
pub struct Gram {
    n: usize,
    dots: Vec<f64>,
}

impl Gram {
    pub fn new(x: &[Vec<f64>]) -> Self {
        let n = x.len();
        let rows = par::map_range(n, |i| (0..n).map(|j| dot(&x[i], &x[j])).collect::<Vec<f64>>());
        Self { n, dots: rows.concat() }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dot(&self, i: usize, j: usize) -> f64 {
        self.dots[i * self.n + j]
    }

    #[inline]
    pub fn kernel(&self, spec: &KernelSpec, i: usize, j: usize) -> f64 {
        spec.from_dot(self.dot(i, j), self.dot(i, i), self.dot(j, j))
    }
}
