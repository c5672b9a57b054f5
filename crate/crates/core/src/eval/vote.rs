use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::NUM_CLASSES;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vote {
    pub class: usize,
    pub mean: [f64; NUM_CLASSES],
}

/// Averages patch score vectors and takes the argmax; exact ties go to the
/// lowest class index.
pub fn vote(scores: &[[f64; NUM_CLASSES]]) -> Result<Vote, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::EmptyVote);
    }
    let mut mean = [0.0; NUM_CLASSES];
    for s in scores {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    let n = scores.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    let mut class = 0;
    for k in 1..NUM_CLASSES {
        if mean[k] > mean[class] {
            class = k;
        }
    }
    Ok(Vote { class, mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let v = vote(&[[0.6, 0.4, 0.0, 0.0], [0.2, 0.8, 0.0, 0.0]]).unwrap();
        assert_eq!(v.class, 1);
        assert!((v.mean[0] - 0.4).abs() < 1e-15 && (v.mean[1] - 0.6).abs() < 1e-15);
        assert_eq!(vote(&[[0.1, 0.2, 0.9, 0.3]]).unwrap().class, 2);
        assert_eq!(vote(&[[0.5, 0.5, 0.0, 0.0]]).unwrap().class, 0);
        assert!(matches!(vote(&[]), Err(EvalError::EmptyVote)));
    }
}
