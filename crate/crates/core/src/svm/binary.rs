use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::matrix::KernelMatrix;
use super::smo::{solve, DualSolution, SmoConfig};
use super::SvmError;

/// Trained two-class machine. Only support vectors (`a_i > 0`) are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    /// `+1` or `-1` for each support vector.
    pub labels: Vec<f64>,
    pub b: f64,
    pub kernel: KernelSpec,
    pub c: f64,
}

impl BinarySvm {
    pub fn dim(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }

    /// `f(x) = sum a_i y_i K(x_i, x) + b`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(self.alphas.iter().zip(&self.labels))
            .map(|(sv, (a, y))| a * y * self.kernel.eval_unchecked(sv, x))
            .sum::<f64>()
            + self.b
    }

    /// `+1` when `f(x) >= 0`, else `-1`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.decision(x) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    pub(crate) fn from_solution(x: &[Vec<f64>], idx: &[usize], y: &[f64], sol: &DualSolution, kernel: KernelSpec, c: f64) -> Self {
        let mut m = BinarySvm { support_vectors: Vec::new(), alphas: Vec::new(), labels: Vec::new(), b: sol.b, kernel, c };
        for (k, &a) in sol.alpha.iter().enumerate() {
            if a > 0.0 {
                m.support_vectors.push(x[idx[k]].clone());
                m.alphas.push(a);
                m.labels.push(y[k]);
            }
        }
        m
    }
}

/// Machine plus the full dual solution over all training points.
#[derive(Debug, Clone)]
pub struct BinaryFit {
    pub model: BinarySvm,
    pub solution: DualSolution,
}

pub(crate) fn check_binary(x: &[Vec<f64>], y: &[f64], c: f64, spec: &KernelSpec) -> Result<(), SvmError> {
    spec.validate()?;
    if !(c > 0.0) || !c.is_finite() {
        return Err(SvmError::Parameter(format!("C must be positive, got {c}")));
    }
    if x.is_empty() {
        return Err(SvmError::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(SvmError::LengthMismatch { expected: x.len(), found: y.len() });
    }
    let d = x[0].len();
    if let Some(bad) = x.iter().find(|v| v.len() != d) {
        return Err(SvmError::LengthMismatch { expected: d, found: bad.len() });
    }
    if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(SvmError::InvalidLabel(format!("binary labels must be +1 or -1, got {bad}")));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(SvmError::SingleClass);
    }
    Ok(())
}

pub fn train_binary(x: &[Vec<f64>], y: &[f64], c: f64, spec: KernelSpec) -> Result<BinarySvm, SvmError> {
    Ok(train_binary_with(x, y, c, spec, &SmoConfig::default())?.model)
}

pub fn train_binary_with(
    x: &[Vec<f64>],
    y: &[f64],
    c: f64,
    spec: KernelSpec,
    cfg: &SmoConfig,
) -> Result<BinaryFit, SvmError> {
    check_binary(x, y, c, &spec)?;
    let mut q = KernelMatrix::from_vectors(spec, x, y, cfg.cache_bytes);
    let solution = solve(&mut q, c, cfg);
    let idx: Vec<usize> = (0..x.len()).collect();
    let model = BinarySvm::from_solution(x, &idx, y, &solution, spec, c);
    Ok(BinaryFit { model, solution })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_symmetric() {
        let x = vec![vec![-1.0], vec![1.0]];
        let m = train_binary(&x, &[-1.0, 1.0], 10.0, KernelSpec::Linear).unwrap();
        assert!(m.decision(&[0.0]).abs() < 1e-9);
        assert_eq!(m.predict(&[-1.0]), -1.0);
        assert_eq!(m.predict(&[1.0]), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(train_binary(&x, &[1.0, 1.0], 1.0, KernelSpec::Linear), Err(SvmError::SingleClass)));
        assert!(matches!(train_binary(&x, &[1.0, 0.0], 1.0, KernelSpec::Linear), Err(SvmError::InvalidLabel(_))));
        assert!(train_binary(&x, &[1.0, -1.0], 0.0, KernelSpec::Linear).is_err());
        assert!(train_binary(&[], &[], 1.0, KernelSpec::Linear).is_err());
    }
}
