//! Ready-made [`Method`]s: the adaptive CNN and texture features with an SVM.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::experiment::{Method, TrainItem};
use crate::acnn::{self, Network, Topology, TrainingConfig, TrainingSample};
use crate::imaging::{self, SourceImage, PATCH_SIZE};
use crate::svm::{self, Grid, GridOptions, KernelSpec, SmoConfig, SvmModel};
use crate::texfeat::FeatureSet;
use crate::{Result, NUM_CLASSES};

fn to_scores(v: &[f64]) -> [f64; NUM_CLASSES] {
    let mut out = [0.0; NUM_CLASSES];
    out.iter_mut().zip(v).for_each(|(o, x)| *o = *x);
    out
}

/// Adaptive CNN on downsampled RGB patches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcnnMethod {
    pub topology: Topology,
    pub training: TrainingConfig,
    pub patch_size: usize,
}

impl Default for AcnnMethod {
    fn default() -> Self {
        Self { topology: Topology::default(), training: TrainingConfig::default(), patch_size: PATCH_SIZE }
    }
}

impl AcnnMethod {
    pub fn new(topology: Topology, training: TrainingConfig) -> Self {
        Self { topology, training, patch_size: PATCH_SIZE }
    }
}

impl Method for AcnnMethod {
    type Sample = TrainingSample;
    type Model = Network;

    fn name(&self) -> String {
        "acnn".into()
    }

    fn config(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialises")
    }

    fn prepare(&self, image: &SourceImage) -> Result<Vec<TrainingSample>> {
        let out = self.topology.input_dims.0;
        if self.topology.input_dims.1 != out {
            return Err(acnn::AcnnError::Config("square network input required".into()).into());
        }
        Ok(imaging::expand_sized(image, self.patch_size)?
            .iter()
            .map(|p| TrainingSample {
                input: acnn::input_maps(&imaging::downsample_to(p, out)),
                class: image.label.index(),
            })
            .collect())
    }

    fn train(&self, fold: usize, items: &[TrainItem<'_, TrainingSample>]) -> Result<(Network, serde_json::Value)> {
        let samples: Vec<&TrainingSample> = items.iter().map(|it| it.sample).collect();
        let cfg = TrainingConfig { seed: self.training.seed.wrapping_add(fold as u64), ..self.training.clone() };
        let name = self.name();
        let (net, log) = acnn::train_with(self.topology.clone(), &samples, &cfg, |it| {
            log::info!(
                "{name}: fold {} iteration {}: lr {:.3e} mse {:.5} train error {:.4}",
                fold + 1,
                it.iteration,
                it.learning_rate,
                it.mse,
                it.train_error
            );
        })?;
        Ok((net, json!({ "seed": cfg.seed, "train_log": log })))
    }

    fn score(&self, model: &Network, sample: &TrainingSample) -> Result<[f64; NUM_CLASSES]> {
        Ok(to_scores(&model.scores(&sample.input)?))
    }

    fn save(&self, model: &Network, stem: &Path) -> Result<Option<PathBuf>> {
        let path = stem.with_extension("acnn");
        acnn::save_model(model, &path)?;
        Ok(Some(path))
    }
}

/// Texture feature vector of one grayscale patch.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmSample(pub Vec<f64>);

/// Texture descriptors on grayscale patches classified by a one-vs-one SVM.
/// With `grid` set, cost and gamma are chosen per fold by inner
/// cross-validation over the fold's training images only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmMethod {
    pub features: FeatureSet,
    pub kernel: KernelSpec,
    /// Cost used when `grid` is `None`.
    pub c: f64,
    pub grid: Option<Grid>,
    pub inner_folds: usize,
    pub seed: u64,
    pub patch_size: usize,
    #[serde(skip)]
    pub smo: SmoConfig,
}

impl SvmMethod {
    pub fn new(features: FeatureSet, kernel: KernelSpec) -> Self {
        Self {
            features,
            kernel,
            c: 1.0,
            grid: Some(Grid::default()),
            inner_folds: 3,
            seed: 0,
            patch_size: PATCH_SIZE,
            smo: SmoConfig::default(),
        }
    }
}

impl Method for SvmMethod {
    type Sample = SvmSample;
    type Model = SvmModel;

    fn name(&self) -> String {
        format!("svm-{}-{}", self.features.name(), self.kernel.name())
    }

    fn config(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialises")
    }

    fn prepare(&self, image: &SourceImage) -> Result<Vec<SvmSample>> {
        imaging::expand_sized(image, self.patch_size)?
            .iter()
            .map(|p| Ok(SvmSample(self.features.extract(&imaging::to_grayscale(p))?.values)))
            .collect()
    }

    fn train(&self, fold: usize, items: &[TrainItem<'_, SvmSample>]) -> Result<(SvmModel, serde_json::Value)> {
        let x: Vec<Vec<f64>> = items.iter().map(|it| it.sample.0.clone()).collect();
        let y: Vec<usize> = items.iter().map(|it| it.class).collect();
        let groups: Vec<usize> = items.iter().map(|it| it.image).collect();
        let (c, kernel, search) = match &self.grid {
            Some(grid) => {
                let opts = GridOptions { folds: self.inner_folds, seed: self.seed.wrapping_add(fold as u64), smo: self.smo };
                let r = svm::grid_search(&x, &y, Some(&groups), self.kernel, grid, &opts)?;
                log::info!(
                    "{}: fold {} grid search picked C={} gamma={:?} (inner accuracy {:.4})",
                    self.name(),
                    fold + 1,
                    r.c,
                    r.gamma,
                    r.accuracy
                );
                (r.c, r.kernel(self.kernel), Some(r))
            }
            None => (self.c, self.kernel, None),
        };
        let model = svm::train_multiclass_with(&x, &y, c, kernel, &self.smo)?;
        let svs: Vec<usize> = model.machines.iter().map(|m| m.svm.alphas.len()).collect();
        let details = json!({
            "c": c,
            "kernel": kernel,
            "support_vectors": svs,
            "grid_accuracy": search.as_ref().map(|r| r.accuracy),
        });
        Ok((model, details))
    }

    fn score(&self, model: &SvmModel, sample: &SvmSample) -> Result<[f64; NUM_CLASSES]> {
        Ok(model.predict(&sample.0)?.votes)
    }

    fn save(&self, model: &SvmModel, stem: &Path) -> Result<Option<PathBuf>> {
        let path = stem.with_extension("asvm");
        svm::save_model(model, &path)?;
        Ok(Some(path))
    }
}
