//! Adam, stratified k-fold splitting and the seeded training loop.
//!
//! Randomness: fold `i` draws everything (initial parameters, then one
//! shuffle per epoch) from `Xoshiro256::substream(seed, i)`; the k-fold
//! assignment uses its own stream seeded with `seed ^ KFOLD_SALT`. Folds are
//! therefore independent and can run in any order or concurrently.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::ImageSet;
use crate::error::{bail, Result};
use crate::math::{powi, sqrt};
use crate::metrics::{EvalReport, MetricSet};
use crate::model::{loss_cross_entropy, Features, FeatureStats, HybridModel, ModelKind, Sample, NUM_WIRES};
use crate::pca::PcaModel;
use crate::rng::Xoshiro256;

pub const KFOLD_SALT: u64 = 0x4B46_4F4C_4453_0001;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub folds: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            learning_rate: 1e-3,
            epochs: 50,
            folds: 3,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            bail!(InvalidArgument, "batch_size must be at least 1");
        }
        if self.folds < 2 {
            bail!(InvalidArgument, "folds must be at least 2, got {}", self.folds);
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            bail!(InvalidArgument, "learning_rate must be finite and non-negative, got {}", self.learning_rate);
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            bail!(InvalidArgument, "Adam betas must lie in [0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            bail!(InvalidArgument, "adam_eps must be positive");
        }
        Ok(())
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

/// One bias-corrected Adam update; increments `state.t` first.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, config: &TrainConfig) -> Result<()> {
    let n = params.len();
    if grads.len() != n || state.m.len() != n || state.v.len() != n {
        bail!(InvalidArgument, "Adam shapes disagree: {n} params, {} grads, {} moments", grads.len(), state.m.len());
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (config.adam_beta1, config.adam_beta2);
    let c1 = 1.0 - powi(b1, t);
    let c2 = 1.0 - powi(b2, t);
    for i in 0..n {
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * grads[i];
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * grads[i] * grads[i];
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= config.learning_rate * m_hat / (sqrt(v_hat) + config.adam_eps);
    }
    Ok(())
}

/// `(train, validation)` index lists, each ascending.
pub type FoldSplit = (Vec<usize>, Vec<usize>);

/// Stratified k-fold assignment. Each class's indices are shuffled and dealt
/// round-robin over the folds, the dealing position carrying over from one
/// class to the next so fold sizes stay balanced overall.
pub fn stratified_kfold(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if folds < 2 {
        bail!(InvalidArgument, "folds must be at least 2, got {folds}");
    }
    let num_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = Xoshiro256::new(seed ^ KFOLD_SALT);
    let mut assignment = vec![0usize; labels.len()];
    let mut offset = 0;
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < folds {
            bail!(StratificationInfeasible, "class {class} has {} samples, fewer than {folds} folds", members.len());
        }
        rng.shuffle(members);
        for (j, &idx) in members.iter().enumerate() {
            assignment[idx] = (offset + j) % folds;
        }
        offset += members.len();
    }
    Ok((0..folds)
        .map(|f| {
            let (val, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| assignment[i] == f);
            (train, val)
        })
        .collect())
}

/// PCA features of one image; the model needs exactly four components.
pub fn encode(pca: &PcaModel, image: &[f64]) -> Result<Features> {
    if pca.k != NUM_WIRES {
        bail!(InvalidArgument, "models take {NUM_WIRES} PCA components, the encoder has {}", pca.k);
    }
    let f = pca.transform(image)?;
    Ok(core::array::from_fn(|i| f[i]))
}

pub fn encode_set(pca: &PcaModel, set: &ImageSet) -> Result<Vec<Sample>> {
    (0..set.len()).map(|i| Ok(Sample { features: encode(pca, set.image(i))?, label: set.labels[i] })).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub report: EvalReport,
}

pub fn evaluate_samples(model: &HybridModel, samples: &[Sample]) -> Result<Evaluation> {
    if samples.is_empty() {
        bail!(InsufficientData, "nothing to evaluate");
    }
    let c = model.num_classes;
    let mut truth = Vec::with_capacity(samples.len());
    let mut predicted = Vec::with_capacity(samples.len());
    let mut probabilities = Vec::with_capacity(samples.len() * c);
    let mut loss = 0.0;
    for s in samples {
        let p = model.forward(&s.features)?;
        loss += loss_cross_entropy(&p, s.label)?;
        truth.push(s.label);
        predicted.push(p.predicted_class());
        probabilities.extend_from_slice(&p.probabilities);
    }
    let loss = loss / samples.len() as f64;
    if !loss.is_finite() {
        bail!(NumericFailure, "non-finite loss");
    }
    Ok(Evaluation { loss, report: EvalReport::from_predictions(&truth, &predicted, &probabilities, c)? })
}

pub fn evaluate(model: &HybridModel, pca: &PcaModel, set: &ImageSet) -> Result<Evaluation> {
    evaluate_samples(model, &encode_set(pca, set)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub train: MetricSet,
    pub val: MetricSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold_index: usize,
    pub curves: Vec<EpochRecord>,
    pub model: HybridModel,
    pub pca: PcaModel,
    pub train_metrics: MetricSet,
    pub val_metrics: MetricSet,
    /// Adam steps taken.
    pub steps: u64,
}

/// Trains `model` in place on pre-encoded samples and records one curve
/// entry per epoch. Batches come from a fresh shuffle each epoch; the last
/// partial batch is kept.
pub fn fit_samples(
    model: &mut HybridModel,
    train: &[Sample],
    val: &[Sample],
    config: &TrainConfig,
    rng: &mut Xoshiro256,
) -> Result<(Vec<EpochRecord>, u64)> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        bail!(InsufficientData, "training and validation sets must be non-empty");
    }
    let mut params = model.params_flat();
    let mut adam = AdamState::new(params.len());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut batch = Vec::with_capacity(config.batch_size);
    let mut curves = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train[i]));
            let grads = model.grad_all(&batch)?;
            if grads.iter().any(|g| !g.is_finite()) {
                bail!(NumericFailure, "non-finite gradient in epoch {epoch}");
            }
            adam_step(&mut params, &grads, &mut adam, config)?;
            model.set_params_flat(&params)?;
        }
        let tr = evaluate_samples(model, train)?;
        let va = evaluate_samples(model, val)?;
        curves.push(EpochRecord {
            epoch,
            train_loss: tr.loss,
            val_loss: va.loss,
            train: tr.report.metrics,
            val: va.report.metrics,
        });
    }
    Ok((curves, adam.t))
}

/// Fits PCA and feature statistics on `train` only, initializes a model from
/// the fold's stream and trains it for `config.epochs` epochs.
pub fn train_model(kind: ModelKind, train: &ImageSet, val: &ImageSet, config: &TrainConfig, fold_index: usize) -> Result<FoldResult> {
    config.validate()?;
    let mut rng = Xoshiro256::substream(config.seed, fold_index as u64);
    let pca = PcaModel::fit_pixels(&train.images, train.dim, NUM_WIRES)?;
    let train_samples = encode_set(&pca, train)?;
    let val_samples = encode_set(&pca, val)?;
    let feats: Vec<Features> = train_samples.iter().map(|s| s.features).collect();
    let mut model = HybridModel::init(kind, train.num_classes, &mut rng)?;
    model.feature_stats = FeatureStats::fit(&feats)?;
    let (curves, steps) = fit_samples(&mut model, &train_samples, &val_samples, config, &mut rng)?;
    let (train_metrics, val_metrics) = match curves.last() {
        Some(last) => (last.train, last.val),
        None => (
            evaluate_samples(&model, &train_samples)?.report.metrics,
            evaluate_samples(&model, &val_samples)?.report.metrics,
        ),
    };
    Ok(FoldResult { fold_index, curves, model, pca, train_metrics, val_metrics, steps })
}

/// Splits for `data` under `config`.
pub fn fold_splits(data: &ImageSet, config: &TrainConfig) -> Result<Vec<FoldSplit>> {
    config.validate()?;
    stratified_kfold(&data.labels, config.folds, config.seed)
}

/// Trains one fold of `splits`.
pub fn run_fold(kind: ModelKind, data: &ImageSet, split: &FoldSplit, config: &TrainConfig, fold_index: usize) -> Result<FoldResult> {
    let train = data.subset(&split.0)?;
    let val = data.subset(&split.1)?;
    train_model(kind, &train, &val, config, fold_index)
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, sqrt(var))
}

/// Index of the largest value; the lowest index wins ties.
pub fn best_fold(val_f1: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in val_f1.iter().enumerate() {
        if v > val_f1[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub folds: Vec<FoldResult>,
    pub val_mean: MetricSet,
    pub val_std: MetricSet,
    pub train_mean: MetricSet,
    pub train_std: MetricSet,
    /// Chosen by validation F1.
    pub best_fold: usize,
}

pub fn summarize(folds: Vec<FoldResult>) -> Result<CrossValidation> {
    if folds.is_empty() {
        bail!(InsufficientData, "no folds to summarize");
    }
    let stat = |pick: &dyn Fn(&FoldResult) -> MetricSet| {
        let mut mean = [0.0; 4];
        let mut std = [0.0; 4];
        for m in 0..4 {
            let vals: Vec<f64> = folds.iter().map(|f| pick(f).as_array()[m]).collect();
            (mean[m], std[m]) = mean_std(&vals);
        }
        (MetricSet::from_array(mean), MetricSet::from_array(std))
    };
    let (val_mean, val_std) = stat(&|f| f.val_metrics);
    let (train_mean, train_std) = stat(&|f| f.train_metrics);
    let best = best_fold(&folds.iter().map(|f| f.val_metrics.f1).collect::<Vec<_>>());
    Ok(CrossValidation { folds, val_mean, val_std, train_mean, train_std, best_fold: best })
}

/// Sequential k-fold cross-validation over `data`.
pub fn cross_validate(kind: ModelKind, data: &ImageSet, config: &TrainConfig) -> Result<CrossValidation> {
    let splits = fold_splits(data, config)?;
    let folds = splits
        .iter()
        .enumerate()
        .map(|(i, split)| run_fold(kind, data, split, config, i))
        .collect::<Result<Vec<_>>>()?;
    summarize(folds)
}
