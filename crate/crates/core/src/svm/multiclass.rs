use serde::{Deserialize, Serialize};

use super::binary::{check_binary, BinarySvm};
use super::kernel::{Gram, KernelSpec};
use super::matrix::KernelMatrix;
use super::smo::{solve, DualSolution, SmoConfig};
use super::SvmError;
use crate::{par, NUM_CLASSES};

/// Class pairs `(positive, negative)` in machine order.
pub const CLASS_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Per-dimension min/max scaling into `[0, 1]`; constant dimensions map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self, SvmError> {
        let first = x.first().ok_or(SvmError::EmptyTrainingSet)?;
        let (mut min, mut max) = (first.clone(), first.clone());
        for v in x {
            if v.len() != min.len() {
                return Err(SvmError::LengthMismatch { expected: min.len(), found: v.len() });
            }
            for (d, &val) in v.iter().enumerate() {
                min[d] = min[d].min(val);
                max[d] = max[d].max(val);
            }
        }
        Ok(Self { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&x, (&lo, &hi))| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }

    pub fn apply_all(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|v| self.apply(v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMachine {
    pub positive: usize,
    pub negative: usize,
    pub svm: BinarySvm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub scaler: Scaler,
    pub machines: Vec<PairMachine>,
    pub kernel: KernelSpec,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub class: usize,
    /// Fraction of the six pairwise votes won by each class.
    pub votes: [f64; NUM_CLASSES],
}

/// Tallies pairwise votes from decision values ordered as [`CLASS_PAIRS`].
/// Ties on votes go to the class with the larger summed signed decision
/// value, then to the lowest index.
pub fn vote_pairs(decisions: &[f64]) -> Prediction {
    let mut votes = [0usize; NUM_CLASSES];
    let mut margin = [0.0f64; NUM_CLASSES];
    for (&(p, n), &f) in CLASS_PAIRS.iter().zip(decisions) {
        if f >= 0.0 {
            votes[p] += 1;
        } else {
            votes[n] += 1;
        }
        margin[p] += f;
        margin[n] -= f;
    }
    let mut best = 0;
    for k in 1..NUM_CLASSES {
        if votes[k] > votes[best] || (votes[k] == votes[best] && margin[k] > margin[best]) {
            best = k;
        }
    }
    let total = CLASS_PAIRS.len() as f64;
    Prediction { class: best, votes: votes.map(|v| v as f64 / total) }
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn decisions(&self, x: &[f64]) -> Result<Vec<f64>, SvmError> {
        if x.len() != self.dim() {
            return Err(SvmError::LengthMismatch { expected: self.dim(), found: x.len() });
        }
        let z = self.scaler.apply(x);
        Ok(self.machines.iter().map(|m| m.svm.decision(&z)).collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction, SvmError> {
        Ok(vote_pairs(&self.decisions(x)?))
    }
}

pub(crate) fn check_classes(y: &[usize]) -> Result<(), SvmError> {
    if let Some(&bad) = y.iter().find(|&&c| c >= NUM_CLASSES) {
        return Err(SvmError::InvalidLabel(format!("class index {bad} out of range")));
    }
    for k in 0..NUM_CLASSES {
        if !y.contains(&k) {
            return Err(SvmError::MissingClass(k));
        }
    }
    Ok(())
}

/// Solves the pair problem `(p, n)` over the points `subset` (indices into
/// the Gram matrix). Returns the pair's point indices, their `+-1` labels
/// and the dual solution.
pub(crate) fn solve_pair(
    gram: &Gram,
    subset: &[usize],
    y: &[usize],
    (p, n): (usize, usize),
    c: f64,
    spec: KernelSpec,
    cfg: &SmoConfig,
) -> (Vec<usize>, Vec<f64>, DualSolution) {
    let idx: Vec<usize> = subset.iter().copied().filter(|&i| y[i] == p || y[i] == n).collect();
    let labels: Vec<f64> = idx.iter().map(|&i| if y[i] == p { 1.0 } else { -1.0 }).collect();
    let mut q = KernelMatrix::from_gram(spec, gram, &idx, &labels, cfg.cache_bytes);
    let sol = solve(&mut q, c, cfg);
    (idx, labels, sol)
}

/// Trains the six machines on already-scaled features `z` with their Gram matrix.
pub(crate) fn train_pairs(
    z: &[Vec<f64>],
    gram: &Gram,
    y: &[usize],
    c: f64,
    spec: KernelSpec,
    cfg: &SmoConfig,
) -> Vec<PairMachine> {
    let all: Vec<usize> = (0..z.len()).collect();
    par::map_slice(&CLASS_PAIRS, |&(p, n)| {
        let (idx, labels, sol) = solve_pair(gram, &all, y, (p, n), c, spec, cfg);
        PairMachine { positive: p, negative: n, svm: BinarySvm::from_solution(z, &idx, &labels, &sol, spec, c) }
    })
}

pub fn train_multiclass(x: &[Vec<f64>], y: &[usize], c: f64, spec: KernelSpec) -> Result<SvmModel, SvmError> {
    train_multiclass_with(x, y, c, spec, &SmoConfig::default())
}

pub fn train_multiclass_with(
    x: &[Vec<f64>],
    y: &[usize],
    c: f64,
    spec: KernelSpec,
    cfg: &SmoConfig,
) -> Result<SvmModel, SvmError> {
    if x.len() != y.len() {
        return Err(SvmError::LengthMismatch { expected: x.len(), found: y.len() });
    }
    check_classes(y)?;
    let scaler = Scaler::fit(x)?;
    let z = scaler.apply_all(x);
    let pm: Vec<f64> = y.iter().map(|&k| if k == 0 { 1.0 } else { -1.0 }).collect();
    check_binary(&z, &pm, c, &spec)?;
    let gram = Gram::new(&z);
    let machines = train_pairs(&z, &gram, y, c, spec, cfg);
    Ok(SvmModel { scaler, machines, kernel: spec, c })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vote_tie_breaks() {
        // class 0 beats 1, 1 beats 2, 2 beats 0 ... all decisions favour the
        // positive class: votes 0:3, 1:2, 2:1, 3:0
        let p = vote_pairs(&[1.0; 6]);
        assert_eq!(p.class, 0);
        assert!((p.votes.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // 0 and 1 both win two votes; 1 has the larger margin.
        let d = [0.1, -0.1, 0.1, 5.0, 5.0, 0.1];
        let p = vote_pairs(&d);
        // votes: 0 -> {(0,1),(0,3)} = 2; 1 -> {(1,2),(1,3)} = 2; 2 -> {(0,2),(2,3)} = 2
        assert_eq!(p.class, 1);
    }

    #[test]
    fn scaler_maps_training_range() {
        let x = vec![vec![1.0, 5.0, 2.0], vec![3.0, 5.0, -2.0]];
        let s = Scaler::fit(&x).unwrap();
        assert_eq!(s.apply(&x[0]), vec![0.0, 0.0, 1.0]);
        assert_eq!(s.apply(&x[1]), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn missing_class() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert!(matches!(train_multiclass(&x, &[0, 1, 2], 1.0, KernelSpec::Linear), Err(SvmError::MissingClass(3))));
    }
}
