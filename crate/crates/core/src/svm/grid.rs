use serde::{Deserialize, Serialize};

use super::kernel::{Gram, KernelSpec};
use super::multiclass::{check_classes, solve_pair, vote_pairs, Scaler, CLASS_PAIRS};
use super::smo::SmoConfig;
use super::SvmError;
use crate::{eval, par};

/// Candidate costs and kernel gammas. Gammas are ignored for linear kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub costs: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for Grid {
    /// `C` in `2^-5, 2^-3, ..., 2^15`; gamma in `2^-15, 2^-13, ..., 2^3`.
    fn default() -> Self {
        Self {
            costs: (-5..=15).step_by(2).map(|e| 2f64.powi(e)).collect(),
            gammas: (-15..=3).step_by(2).map(|e| 2f64.powi(e)).collect(),
        }
    }
}

impl Grid {
    pub fn single(c: f64, gamma: f64) -> Self {
        Self { costs: vec![c], gammas: vec![gamma] }
    }

    /// Cells in evaluation order: ascending `C`, then ascending gamma.
    fn cells(&self, spec: &KernelSpec) -> Vec<(f64, Option<f64>)> {
        let sorted = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let costs = sorted(&self.costs);
        let gammas: Vec<Option<f64>> = match spec.gamma() {
            None => vec![None],
            Some(_) => sorted(&self.gammas).into_iter().map(Some).collect(),
        };
        costs.iter().flat_map(|&c| gammas.iter().map(move |&g| (c, g))).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GridOptions {
    pub folds: usize,
    pub seed: u64,
    pub smo: SmoConfig,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { folds: 3, seed: 0, smo: SmoConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub c: f64,
    pub gamma: Option<f64>,
    pub correct: usize,
    pub total: usize,
}

impl GridCell {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub c: f64,
    pub gamma: Option<f64>,
    pub accuracy: f64,
    pub cells: Vec<GridCell>,
}

impl GridResult {
    /// The kernel with the selected gamma.
    pub fn kernel(&self, base: KernelSpec) -> KernelSpec {
        self.gamma.map_or(base, |g| base.with_gamma(g))
    }
}

/// Exhaustive search by stratified `folds`-fold cross-validation over the
/// given training data. Features are min/max scaled once over `x`. When
/// `groups` is given, all items sharing a group id land in the same fold.
/// Returns the most accurate cell; ties go to smaller `C`, then smaller gamma.
pub fn grid_search(
    x: &[Vec<f64>],
    y: &[usize],
    groups: Option<&[usize]>,
    spec: KernelSpec,
    grid: &Grid,
    opts: &GridOptions,
) -> Result<GridResult, SvmError> {
    if grid.costs.is_empty() || (spec.gamma().is_some() && grid.gammas.is_empty()) {
        return Err(SvmError::EmptyGrid);
    }
    if x.len() != y.len() {
        return Err(SvmError::LengthMismatch { expected: x.len(), found: y.len() });
    }
    check_classes(y)?;
    let cells = grid.cells(&spec);
    for &(c, g) in &cells {
        if !(c > 0.0) {
            return Err(SvmError::Parameter(format!("grid cost must be positive, got {c}")));
        }
        g.map_or(spec, |g| spec.with_gamma(g)).validate()?;
    }

    let fold_of = eval::assign_folds(y, groups, opts.folds, opts.seed)?;
    let z = Scaler::fit(x)?.apply_all(x);
    let gram = Gram::new(&z);
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..opts.folds)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..x.len()).partition(|&i| fold_of[i] == f);
            (train, test)
        })
        .collect();

    let scored: Vec<GridCell> = par::map_slice(&cells, |&(c, g)| {
        let kernel = g.map_or(spec, |g| spec.with_gamma(g));
        let mut correct = 0;
        for (train, test) in &splits {
            // decisions[t][m]: machine m evaluated at test point t
            let mut decisions = vec![[0.0f64; 6]; test.len()];
            for (m, &pair) in CLASS_PAIRS.iter().enumerate() {
                let (idx, labels, sol) = solve_pair(&gram, train, y, pair, c, kernel, &opts.smo);
                let sv: Vec<(usize, f64)> = idx
                    .iter()
                    .zip(labels.iter().zip(&sol.alpha))
                    .filter(|(_, (_, &a))| a > 0.0)
                    .map(|(&i, (&l, &a))| (i, a * l))
                    .collect();
                for (t, &k) in test.iter().enumerate() {
                    decisions[t][m] = sv.iter().map(|&(i, w)| w * gram.kernel(&kernel, i, k)).sum::<f64>() + sol.b;
                }
            }
            correct += test.iter().zip(&decisions).filter(|(&k, d)| vote_pairs(&d[..]).class == y[k]).count();
        }
        GridCell { c, gamma: g, correct, total: x.len() }
    });

    let mut best = 0;
    for (k, cell) in scored.iter().enumerate() {
        if cell.correct > scored[best].correct {
            best = k;
        }
    }
    let b = scored[best];
    Ok(GridResult { c: b.c, gamma: b.gamma, accuracy: b.accuracy(), cells: scored })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_ranges() {
        let g = Grid::default();
        assert_eq!(g.costs.len(), 11);
        assert_eq!(g.gammas.len(), 10);
        assert_eq!(g.costs[0], 2f64.powi(-5));
        assert_eq!(*g.gammas.last().unwrap(), 8.0);
    }

    #[test]
    fn cells_sorted_and_deduplicated() {
        let g = Grid { costs: vec![4.0, 1.0, 4.0], gammas: vec![0.5, 0.25] };
        assert_eq!(
            g.cells(&KernelSpec::rbf(1.0)),
            vec![(1.0, Some(0.25)), (1.0, Some(0.5)), (4.0, Some(0.25)), (4.0, Some(0.5))]
        );
        assert_eq!(g.cells(&KernelSpec::Linear), vec![(1.0, None), (4.0, None)]);
    }

    #[test]
    fn empty_grid() {
        let x = vec![vec![0.0]; 4];
        let g = Grid { costs: vec![], gammas: vec![1.0] };
        assert!(matches!(
            grid_search(&x, &[0, 1, 2, 3], None, KernelSpec::Linear, &g, &GridOptions::default()),
            Err(SvmError::EmptyGrid)
        ));
    }
}
