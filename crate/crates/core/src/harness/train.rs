use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::bce_with_logits;
use crate::data::{Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricReport};

use super::config::{derive_seed, ModelConfig};
use super::model::Model;

const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;

/// How fold bests are combined into one score per configuration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    #[default]
    Mean,
    Median,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub aggregate: Aggregate,
    /// Runs folds concurrently; results are identical either way.
    pub parallel_folds: bool,
}

impl TrainSettings {
    pub fn new(epochs: usize, batch_size: usize) -> Self {
        Self {
            epochs,
            batch_size,
            aggregate: Aggregate::Mean,
            parallel_folds: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val: MetricReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub epochs: Vec<EpochRecord>,
    /// Best value of each metric over the epochs; absent if the fold failed.
    pub best: Option<MetricReport>,
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ModelConfig,
    pub config_hash: String,
    pub label: String,
    pub settings: TrainSettings,
    pub folds: Vec<FoldResult>,
    /// Combination of all fold bests; absent unless every fold succeeded.
    pub aggregate: Option<MetricReport>,
}

impl ExperimentResult {
    pub fn completed(&self) -> bool {
        self.aggregate.is_some()
    }

    pub fn wall_times(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.wall_time).collect()
    }
}

pub(crate) fn combine(values: &[f64], how: Aggregate) -> f64 {
    match how {
        Aggregate::Mean => values.iter().sum::<f64>() / values.len() as f64,
        Aggregate::Median => median(values),
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Trains `config` on every fold and records per-epoch validation metrics.
/// Numerical failures inside a fold are recorded on that fold.
pub fn run_experiment(
    config: &ModelConfig,
    dataset: &Dataset,
    folds: &FoldPlan,
    settings: &TrainSettings,
) -> Result<ExperimentResult> {
    if settings.epochs == 0 {
        return Err(Error::Invalid("epochs must be at least 1".into()));
    }
    if settings.batch_size == 0 {
        return Err(Error::Invalid("batch size must be at least 1".into()));
    }
    if folds.assignments.len() != dataset.len()
        || folds
            .folds
            .iter()
            .flat_map(|f| f.train.iter().chain(&f.val))
            .any(|&i| i >= dataset.len())
    {
        return Err(Error::Folds("fold plan does not match the dataset".into()));
    }
    let hash = config.hash();
    // surfaces configuration and shape errors before any fold starts
    Model::new(
        config,
        dataset.sample_shape(),
        &mut ChaCha8Rng::seed_from_u64(0),
    )?;

    let run = |f: usize| run_fold(config, &hash, dataset, folds, f, settings);
    let fold_results: Vec<FoldResult> = if settings.parallel_folds {
        (0..folds.k).into_par_iter().map(run).collect()
    } else {
        (0..folds.k).map(run).collect()
    };

    let aggregate = if fold_results.iter().all(|f| f.best.is_some()) {
        let per = |m: Metric| {
            let v: Vec<f64> = fold_results
                .iter()
                .map(|f| f.best.unwrap().get(m))
                .collect();
            combine(&v, settings.aggregate)
        };
        Some(MetricReport {
            roc_auc: per(Metric::RocAuc),
            avg_precision: per(Metric::AvgPrecision),
            balanced_acc: per(Metric::BalancedAcc),
        })
    } else {
        None
    };
    Ok(ExperimentResult {
        config: config.clone(),
        config_hash: hash,
        label: config.label(),
        settings: settings.clone(),
        folds: fold_results,
        aggregate,
    })
}

fn run_fold(
    config: &ModelConfig,
    hash: &str,
    dataset: &Dataset,
    plan: &FoldPlan,
    fold: usize,
    settings: &TrainSettings,
) -> FoldResult {
    let start = Instant::now();
    let mut epochs = Vec::new();
    let outcome = train_fold(config, hash, dataset, plan, fold, settings, &mut epochs);
    let (best, error) = match outcome {
        Ok(()) => (Some(best_of(&epochs)), None),
        Err(e) => (None, Some(e.to_string())),
    };
    FoldResult {
        fold,
        epochs,
        best,
        error,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

fn best_of(epochs: &[EpochRecord]) -> MetricReport {
    let max = |m: Metric| {
        epochs
            .iter()
            .map(|e| e.val.get(m))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    MetricReport {
        roc_auc: max(Metric::RocAuc),
        avg_precision: max(Metric::AvgPrecision),
        balanced_acc: max(Metric::BalancedAcc),
    }
}

fn train_fold(
    config: &ModelConfig,
    hash: &str,
    dataset: &Dataset,
    plan: &FoldPlan,
    fold: usize,
    settings: &TrainSettings,
    records: &mut Vec<EpochRecord>,
) -> Result<()> {
    let split = &plan.folds[fold];
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, hash, fold, STREAM_INIT));
    let mut shuffle_rng =
        ChaCha8Rng::seed_from_u64(derive_seed(config.seed, hash, fold, STREAM_SHUFFLE));
    let mut model = Model::new(config, dataset.sample_shape(), &mut init_rng)?;
    let mut order = split.train.clone();
    for epoch in 0..settings.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(settings.batch_size) {
            let (x, y) = dataset.gather(batch);
            model.zero_grad();
            let logits = model.forward(&x, true)?;
            let (loss, grad) = bce_with_logits(&logits, &y)?;
            if !loss.is_finite() {
                return Err(Error::Invalid(format!("non-finite loss in epoch {epoch}")));
            }
            loss_sum += loss * batch.len() as f64;
            model.backward(&grad)?;
            model.step()?;
        }
        let val = evaluate(&mut model, dataset, &split.val, settings.batch_size)?;
        records.push(EpochRecord {
            epoch,
            train_loss: loss_sum / order.len() as f64,
            val,
        });
    }
    Ok(())
}

/// Validation metrics in inference mode.
pub fn evaluate(
    model: &mut Model,
    dataset: &Dataset,
    indices: &[usize],
    batch_size: usize,
) -> Result<MetricReport> {
    let mut logits = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(batch_size.max(1)) {
        let (x, _) = dataset.gather(chunk);
        logits.extend(model.forward(&x, false)?);
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::Invalid("non-finite validation logits".into()));
    }
    let labels: Vec<u8> = indices.iter().map(|&i| dataset.labels()[i]).collect();
    MetricReport::evaluate(&logits, &labels)
}
