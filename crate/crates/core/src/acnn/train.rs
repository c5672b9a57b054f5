//! Training loop: per-patch forward, backprop and update inside each
//! iteration, with a global learning-rate adaptation between iterations.

use std::borrow::Borrow;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::backprop::{backprop, update};
use super::map::Map;
use super::network::{ForwardCache, Network};
use super::topology::{Activation, Topology};
use super::AcnnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Initial learning factor.
    pub learning_rate: f64,
    /// Multiplier applied after an iteration whose MSE decreased.
    pub lr_increase: f64,
    /// Multiplier applied after an iteration whose MSE did not decrease.
    pub lr_decrease: f64,
    pub max_iterations: usize,
    /// Stop once the training classification error is at or below this.
    pub min_train_error: f64,
    /// Parameters are initialised from `U(-init_range, init_range)`.
    pub init_range: f64,
    pub seed: u64,
    /// Visit patches in a freshly shuffled order each iteration.
    pub shuffle: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            lr_increase: 1.05,
            lr_decrease: 0.70,
            max_iterations: 50,
            min_train_error: 0.08,
            init_range: 0.1,
            seed: 0,
            shuffle: true,
        }
    }
}

/// One-hot target with activation-specific on/off levels.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetVector(pub Vec<f64>);

impl TargetVector {
    pub fn one_hot(class: usize, classes: usize, activation: Activation) -> Self {
        let (on, off) = activation.target_levels();
        Self((0..classes).map(|i| if i == class { on } else { off }).collect())
    }
}

/// A training input with its class index.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub input: Vec<Map>,
    pub class: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    /// Learning factor used during this iteration.
    pub learning_rate: f64,
    /// Mean of `E / outputs` over the iteration's patches.
    pub mse: f64,
    /// Fraction of patches whose output argmax missed the label.
    pub train_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    MinTrainError,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainLog {
    pub iterations: Vec<IterationLog>,
    pub stop: StopReason,
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Initialises a network from `cfg.seed` and trains it.
pub fn train<S: Borrow<TrainingSample>>(topology: Topology, samples: &[S], cfg: &TrainingConfig) -> Result<(Network, TrainLog), AcnnError> {
    train_with(topology, samples, cfg, |_| {})
}

/// [`train`] with a callback after every iteration.
pub fn train_with<S: Borrow<TrainingSample>>(
    topology: Topology,
    samples: &[S],
    cfg: &TrainingConfig,
    on_iteration: impl FnMut(&IterationLog),
) -> Result<(Network, TrainLog), AcnnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let net = Network::random(topology, cfg.init_range, &mut rng)?;
    train_from(net, samples, cfg, &mut rng, on_iteration)
}

/// Trains an already initialised network.
pub fn train_from<S: Borrow<TrainingSample>>(
    mut net: Network,
    samples: &[S],
    cfg: &TrainingConfig,
    rng: &mut ChaCha8Rng,
    mut on_iteration: impl FnMut(&IterationLog),
) -> Result<(Network, TrainLog), AcnnError> {
    if samples.is_empty() {
        return Err(AcnnError::EmptyTrainingSet);
    }
    if !(cfg.learning_rate > 0.0) || cfg.max_iterations == 0 {
        return Err(AcnnError::Config("learning rate and iteration budget must be positive".into()));
    }
    let classes = net.topology().outputs();
    let activation = net.topology().activation;
    if let Some(s) = samples.iter().map(Borrow::borrow).find(|s| s.class >= classes) {
        return Err(AcnnError::Config(format!("class {} outside the {classes} network outputs", s.class)));
    }
    let targets: Vec<TargetVector> =
        (0..classes).map(|c| TargetVector::one_hot(c, classes, activation)).collect();

    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut cache = ForwardCache::default();
    let mut lr = cfg.learning_rate;
    let mut log = Vec::new();
    let mut prev_mse: Option<f64> = None;
    let mut stop = StopReason::MaxIterations;

    for iteration in 1..=cfg.max_iterations {
        if cfg.shuffle {
            order.shuffle(rng);
        }
        let mut sse = 0.0;
        let mut misses = 0usize;
        for &i in &order {
            let sample: &TrainingSample = samples[i].borrow();
            let target = &targets[sample.class].0;
            let y = net.forward(&mut cache, &sample.input)?;
            if argmax(&y) != sample.class {
                misses += 1;
            }
            let grads = backprop(&net, &cache, target)?;
            sse += grads.error;
            update(&mut net, &grads, lr)?;
        }
        let entry = IterationLog {
            iteration,
            learning_rate: lr,
            mse: sse / (samples.len() * classes) as f64,
            train_error: misses as f64 / samples.len() as f64,
        };
        if !entry.mse.is_finite() {
            return Err(AcnnError::Diverged { iteration });
        }
        on_iteration(&entry);
        log.push(entry);
        if let Some(prev) = prev_mse {
            lr *= if entry.mse < prev { cfg.lr_increase } else { cfg.lr_decrease };
        }
        prev_mse = Some(entry.mse);
        if entry.train_error <= cfg.min_train_error {
            stop = StopReason::MinTrainError;
            break;
        }
    }
    Ok((net, TrainLog { iterations: log, stop }))
}

/// Fraction of samples misclassified by `net`.
pub fn classification_error<S: Borrow<TrainingSample>>(net: &Network, samples: &[S]) -> Result<f64, AcnnError> {
    let mut cache = ForwardCache::default();
    let mut misses = 0;
    for s in samples.iter().map(Borrow::borrow) {
        if argmax(&net.forward(&mut cache, &s.input)?) != s.class {
            misses += 1;
        }
    }
    Ok(misses as f64 / samples.len().max(1) as f64)
}
