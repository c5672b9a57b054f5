use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::folds::FoldPlan;
use super::metrics::{collapse, metrics, ConfusionMatrix2, ConfusionMatrix4, MetricsReport};
use super::vote::vote;
use super::EvalError;
use crate::imaging::SourceImage;
use crate::{par, Result, NUM_CLASSES};

/// One training sample handed to [`Method::train`].
#[derive(Debug, Clone, Copy)]
pub struct TrainItem<'a, S> {
    pub sample: &'a S,
    pub class: usize,
    /// Index of the source image the sample came from.
    pub image: usize,
}

/// A patch classifier that can be cross-validated by [`run_experiment`].
pub trait Method: Sync {
    /// Preprocessed per-patch input.
    type Sample: Send + Sync;
    type Model: Send + Sync;

    fn name(&self) -> String;

    /// Parameters echoed into reports.
    fn config(&self) -> serde_json::Value;

    /// Turns a source image into its patch samples.
    fn prepare(&self, image: &SourceImage) -> Result<Vec<Self::Sample>>;

    /// Trains on one fold, returning the model and method-specific details.
    fn train(&self, fold: usize, items: &[TrainItem<'_, Self::Sample>]) -> Result<(Self::Model, serde_json::Value)>;

    /// Per-class scores for one patch.
    fn score(&self, model: &Self::Model, sample: &Self::Sample) -> Result<[f64; NUM_CLASSES]>;

    /// Writes the model next to `stem` (adding an extension); returns the file written.
    fn save(&self, _model: &Self::Model, _stem: &Path) -> Result<Option<PathBuf>> {
        Ok(None)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOptions {
    /// Directory for per-fold model files.
    pub model_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagePrediction {
    pub image_id: String,
    pub truth: usize,
    pub predicted: usize,
    pub mean_scores: [f64; NUM_CLASSES],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_images: usize,
    pub test_images: usize,
    pub train_patches: usize,
    pub confusion: ConfusionMatrix4,
    pub identification_accuracy: Option<f64>,
    pub train_seconds: f64,
    pub model_file: Option<String>,
    pub details: serde_json::Value,
    pub predictions: Vec<ImagePrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub folds_k: usize,
    pub group_by_patient: bool,
    pub images: usize,
    pub confusion4: ConfusionMatrix4,
    pub confusion2: ConfusionMatrix2,
    pub detection: MetricsReport,
    pub identification_accuracy: Option<f64>,
    pub elapsed_seconds: f64,
    pub folds: Vec<FoldReport>,
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

impl ExperimentReport {
    pub const CSV_HEADER: &'static str =
        "method,config,folds,images,identification_acc,detection_acc,sensitivity,specificity,precision,tp,tn,fp,fn";

    /// One summary row; undefined metrics are written as `NA`.
    pub fn csv_row(&self) -> String {
        let config = self.config.to_string().replace('"', "'");
        let d = &self.detection;
        format!(
            "{},\"{}\",{},{},{},{},{},{},{},{},{},{},{}",
            self.method,
            config,
            self.folds_k,
            self.images,
            fmt_metric(self.identification_accuracy),
            fmt_metric(d.accuracy),
            fmt_metric(d.sensitivity),
            fmt_metric(d.specificity),
            fmt_metric(d.precision),
            d.tp,
            d.tn,
            d.fp,
            d.fn_
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Cross-validates `method` over `images` following `plan`: per fold, trains
/// on all patches of the training images, scores every patch of each test
/// image, votes per image and accumulates the confusion matrix.
pub fn run_experiment<M: Method>(
    images: &[SourceImage],
    method: &M,
    plan: &FoldPlan,
    opts: &ExperimentOptions,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let seen = plan.test_fold_of(images.len());
    if let Some(i) = plan.folds.iter().flat_map(|f| f.train.iter().chain(&f.test)).find(|&&i| i >= images.len()) {
        return Err(EvalError::LengthMismatch(format!("fold plan references image {i} of {}", images.len())).into());
    }
    if seen.iter().any(Option::is_none) {
        log::warn!("fold plan leaves some images untested");
    }

    log::info!("{}: preparing {} images", method.name(), images.len());
    let samples: Vec<Vec<M::Sample>> = par::try_map_slice(images, |im| method.prepare(im))?;
    if let Some(dir) = &opts.model_dir {
        std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    }

    // Folds are independent (each seeds its own model), so they run in
    // parallel; reports are collected in fold order.
    let folds = par::try_map_range(plan.folds.len(), |f| {
        let fold = &plan.folds[f];
        let items: Vec<TrainItem<'_, M::Sample>> = fold
            .train
            .iter()
            .flat_map(|&i| samples[i].iter().map(move |s| TrainItem { sample: s, class: images[i].label.index(), image: i }))
            .collect();
        log::info!("{}: fold {}/{}: training on {} patches", method.name(), f + 1, plan.folds.len(), items.len());
        let t0 = Instant::now();
        let (model, details) = method.train(f, &items)?;
        let train_seconds = t0.elapsed().as_secs_f64();
        let model_file = match &opts.model_dir {
            Some(dir) => method.save(&model, &dir.join(format!("fold{}", f + 1)))?.map(|p| p.display().to_string()),
            None => None,
        };

        let mut cm = ConfusionMatrix4::new();
        let mut predictions = Vec::with_capacity(fold.test.len());
        for &i in &fold.test {
            let scores = par::try_map_slice(&samples[i], |s| method.score(&model, s))?;
            let v = vote(&scores)?;
            let truth = images[i].label.index();
            cm.add(truth, v.class);
            predictions.push(ImagePrediction {
                image_id: images[i].image_id.clone(),
                truth,
                predicted: v.class,
                mean_scores: v.mean,
            });
        }
        log::info!("{}: fold {} identification accuracy {}", method.name(), f + 1, fmt_metric(cm.accuracy()));
        Ok::<_, crate::Error>(FoldReport {
            fold: f,
            train_images: fold.train.len(),
            test_images: fold.test.len(),
            train_patches: items.len(),
            confusion: cm,
            identification_accuracy: cm.accuracy(),
            train_seconds,
            model_file,
            details,
            predictions,
        })
    })?;
    let mut total = ConfusionMatrix4::new();
    for f in &folds {
        total.merge(&f.confusion);
    }

    let cm2 = collapse(&total);
    Ok(ExperimentReport {
        method: method.name(),
        config: method.config(),
        seed: plan.seed,
        folds_k: plan.k,
        group_by_patient: plan.group_by_patient,
        images: images.len(),
        confusion4: total,
        confusion2: cm2,
        detection: metrics(&cm2),
        identification_accuracy: total.accuracy(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        folds,
    })
}
