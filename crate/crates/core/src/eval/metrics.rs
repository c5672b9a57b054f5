use serde::{Deserialize, Serialize};

use crate::NUM_CLASSES;

/// 4-class confusion matrix; rows are true classes, columns predictions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix4 {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix4 {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for (r, o) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in r.iter_mut().zip(o) {
                *a += b;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..NUM_CLASSES).map(|k| self.counts[k][k]).sum()
    }

    /// 4-class identification accuracy; `None` for an empty matrix.
    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.correct(), self.total())
    }
}

/// Normal-vs-cancer matrix: index 0 is normal, 1 is cancer (positive).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix2 {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix2 {
    pub fn from_counts(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { counts: [[tn, fp], [fn_, tp]] }
    }

    pub fn tp(&self) -> u64 {
        self.counts[1][1]
    }
    pub fn tn(&self) -> u64 {
        self.counts[0][0]
    }
    pub fn fp(&self) -> u64 {
        self.counts[0][1]
    }
    pub fn fn_(&self) -> u64 {
        self.counts[1][0]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Merges the three cancer classes into one.
pub fn collapse(cm: &ConfusionMatrix4) -> ConfusionMatrix2 {
    let bin = |k: usize| usize::from(k != 0);
    let mut out = ConfusionMatrix2::default();
    for (t, row) in cm.counts.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            out.counts[bin(t)][bin(p)] += n;
        }
    }
    out
}

/// Detection metrics with cancer as the positive class. A metric whose
/// denominator is zero is `None` (serialised as `null`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl MetricsReport {
    /// Names of the metrics that are undefined.
    pub fn undefined(&self) -> Vec<&'static str> {
        [
            ("accuracy", self.accuracy),
            ("sensitivity", self.sensitivity),
            ("specificity", self.specificity),
            ("precision", self.precision),
        ]
        .iter()
        .filter(|(_, v)| v.is_none())
        .map(|(n, _)| *n)
        .collect()
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix2) -> MetricsReport {
    let (tp, tn, fp, fn_) = (cm.tp(), cm.tn(), cm.fp(), cm.fn_());
    MetricsReport {
        accuracy: ratio(tp + tn, tp + tn + fp + fn_),
        sensitivity: ratio(tp, tp + fn_),
        specificity: ratio(tn, tn + fp),
        precision: ratio(tp, tp + fp),
        tp,
        tn,
        fp,
        fn_,
    }
}
