use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::imaging::SourceImage;
use crate::NUM_CLASSES;

pub const DEFAULT_FOLDS: usize = 5;

/// Assigns every item a fold in `0..k`, stratified by label.
///
/// Items sharing a group id always share a fold; a group is stratified by the
/// label of its first item. Within each class the units (groups, or items
/// when `groups` is `None`) are shuffled with a seeded ChaCha8 generator and
/// dealt round-robin, so test blocks differ in size by at most one unit.
pub fn assign_folds(labels: &[usize], groups: Option<&[usize]>, k: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidFoldCount(k));
    }
    if let Some(g) = groups {
        if g.len() != labels.len() {
            return Err(EvalError::LengthMismatch(format!("{} labels, {} groups", labels.len(), g.len())));
        }
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= NUM_CLASSES) {
        return Err(EvalError::InvalidClass(bad));
    }
    // Units in order of first appearance.
    let mut unit_of = Vec::with_capacity(labels.len());
    let mut units: Vec<usize> = Vec::new(); // unit -> label
    let mut seen: HashMap<usize, usize> = HashMap::new();
    for (i, &label) in labels.iter().enumerate() {
        let key = groups.map_or(i, |g| g[i]);
        let u = *seen.entry(key).or_insert_with(|| {
            units.push(label);
            units.len() - 1
        });
        unit_of.push(u);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit_fold = vec![0; units.len()];
    for class in 0..NUM_CLASSES {
        let mut members: Vec<usize> = (0..units.len()).filter(|&u| units[u] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            return Err(EvalError::TooFewImages { class, have: members.len(), need: k });
        }
        members.shuffle(&mut rng);
        for (p, &u) in members.iter().enumerate() {
            unit_fold[u] = p % k;
        }
    }
    Ok(unit_of.iter().map(|&u| unit_fold[u]).collect())
}

/// Train/test image indices of one fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub group_by_patient: bool,
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    /// Fold index in which each image is tested.
    pub fn test_fold_of(&self, n_images: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n_images];
        for (f, fold) in self.folds.iter().enumerate() {
            for &i in &fold.test {
                out[i] = Some(f);
            }
        }
        out
    }
}

/// Stratified `k`-fold plan over source images. Every class must have at
/// least `k` images (or patients, when grouping by patient).
pub fn make_folds(images: &[SourceImage], k: usize, seed: u64, group_by_patient: bool) -> Result<FoldPlan, EvalError> {
    let labels: Vec<usize> = images.iter().map(|im| im.label.index()).collect();
    for class in 0..NUM_CLASSES {
        if !labels.contains(&class) {
            return Err(EvalError::TooFewImages { class, have: 0, need: k.max(2) });
        }
    }
    let groups: Option<Vec<usize>> = group_by_patient.then(|| {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        images
            .iter()
            .map(|im| {
                let next = ids.len();
                *ids.entry(im.patient_id.as_str()).or_insert(next)
            })
            .collect()
    });
    let fold_of = assign_folds(&labels, groups.as_deref(), k, seed)?;
    let folds = (0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..images.len()).partition(|&i| fold_of[i] == f);
            Fold { train, test }
        })
        .collect();
    Ok(FoldPlan { k, seed, group_by_patient, folds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_round_robin() {
        let labels: Vec<usize> = (0..200).map(|i| i / 50).collect();
        let f = assign_folds(&labels, None, 5, 9).unwrap();
        for fold in 0..5 {
            for class in 0..4 {
                let n = (0..200).filter(|&i| f[i] == fold && labels[i] == class).count();
                assert_eq!(n, 10);
            }
        }
        assert_eq!(f, assign_folds(&labels, None, 5, 9).unwrap());
        assert_ne!(f, assign_folds(&labels, None, 5, 10).unwrap());
    }

    #[test]
    fn groups_stay_together() {
        let labels: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let groups: Vec<usize> = (0..40).map(|i| i % 12).collect();
        let f = assign_folds(&labels, Some(&groups), 3, 1).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                if groups[i] == groups[j] {
                    assert_eq!(f[i], f[j]);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_k() {
        let labels = [0, 0, 1, 1];
        assert!(matches!(assign_folds(&labels, None, 1, 0), Err(EvalError::InvalidFoldCount(1))));
        assert!(matches!(assign_folds(&labels, None, 3, 0), Err(EvalError::TooFewImages { class: 0, have: 2, need: 3 })));
    }
}
