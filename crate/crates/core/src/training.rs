//! Mini-batch training and accuracy evaluation.

use std::time::Instant;

use imubench_nn::{AdamConfig, AdamState, Batch, Mode, Model, ModelSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::signal::{Window, CHANNELS};

/// Windows per forward pass during evaluation.
const EVAL_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Test accuracy is measured every `eval_every` epochs and after the last.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self { lr: adam.lr, beta1: adam.beta1, beta2: adam.beta2, eps: adam.eps, batch: 64, epochs: 30, seed: 0, eval_every: 1 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::InvalidArgument("eval_every must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate {} must be positive", self.lr)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.eps.is_nan() || self.eps <= 0.0 {
            return Err(Error::InvalidArgument("Adam betas must lie in [0, 1) and eps must be positive".into()));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, eps: self.eps }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_acc: Option<f64>,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingLog {
    /// Accuracy measured after the last epoch.
    pub fn final_accuracy(&self) -> Option<f64> {
        self.epochs.last().and_then(|r| r.test_acc)
    }

    /// Epoch with the highest measured test accuracy (earliest on ties).
    pub fn best_epoch(&self) -> Option<&EpochRecord> {
        self.epochs
            .iter()
            .filter(|r| r.test_acc.is_some())
            .fold(None, |best: Option<&EpochRecord>, r| match best {
                Some(b) if b.test_acc >= r.test_acc => Some(b),
                _ => Some(r),
            })
    }

    /// Number of non-increasing loss transitions among the first three
    /// epochs, out of the transitions available (at most two).
    pub fn early_loss_trend(&self) -> (usize, usize) {
        let first: Vec<f64> = self.epochs.iter().take(3).map(|r| r.train_loss).collect();
        let pairs = first.windows(2);
        let total = pairs.len();
        (first.windows(2).filter(|p| p[1] <= p[0]).count(), total)
    }
}

pub fn build_model(spec: ModelSpec, seed: u64) -> Result<Model<f32>> {
    Ok(Model::new(spec, seed)?)
}

/// Packs windows into a `[B, 6, L]` single-precision batch.
pub fn windows_to_batch(windows: &[&Window]) -> Result<Batch<f32>> {
    let first = windows.first().ok_or_else(|| Error::Empty("no windows to batch".into()))?;
    let len = first.len();
    let mut data = vec![0f32; windows.len() * CHANNELS * len];
    for (b, w) in windows.iter().enumerate() {
        if w.len() != len {
            return Err(Error::InvalidArgument(format!("window {b} has length {}, expected {len}", w.len())));
        }
        for (t, s) in w.samples.iter().enumerate() {
            for (c, v) in s.channels().into_iter().enumerate() {
                data[(b * CHANNELS + c) * len + t] = v as f32;
            }
        }
    }
    Ok(Batch::new(data, windows.len(), len)?)
}

/// Percentage of windows whose arg-max prediction equals the label.
pub fn evaluate(model: &mut Model<f32>, windows: &[Window]) -> Result<f64> {
    if windows.is_empty() {
        return Err(Error::Empty("cannot evaluate on zero windows".into()));
    }
    let mut correct = 0usize;
    let refs: Vec<&Window> = windows.iter().collect();
    for chunk in refs.chunks(EVAL_CHUNK) {
        let preds = model.predict(&windows_to_batch(chunk)?)?;
        correct += preds.iter().zip(chunk).filter(|(p, w)| **p == w.label).count();
    }
    Ok(100.0 * correct as f64 / windows.len() as f64)
}

/// Trains with Adam over seeded shuffled mini-batches. `on_epoch` sees each
/// log record as soon as it is produced.
pub fn train(
    model: &mut Model<f32>,
    dataset: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainingLog> {
    cfg.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::Empty("training set has no windows".into()));
    }
    if model.spec().classes != dataset.class_count() {
        return Err(Error::InvalidArgument(format!(
            "model has {} classes, dataset {} has {}",
            model.spec().classes,
            dataset.name,
            dataset.class_count()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(cfg.adam());
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    let mut log = TrainingLog::default();

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for idx in order.chunks(cfg.batch) {
            let windows: Vec<&Window> = idx.iter().map(|&i| &dataset.train[i]).collect();
            let labels: Vec<usize> = windows.iter().map(|w| w.label).collect();
            let batch = windows_to_batch(&windows)?;
            model.zero_grad();
            let loss = model.loss_and_grad(&batch, &labels, Mode::Train { seed: rng.gen() })?;
            if !loss.is_finite() {
                return Err(Error::Train(format!("non-finite loss in epoch {epoch}")));
            }
            loss_sum += loss as f64 * idx.len() as f64;
            adam.step_params(&mut model.params_mut())?;
        }
        let measure = epoch % cfg.eval_every == 0 || epoch == cfg.epochs;
        let test_acc = if measure && !dataset.test.is_empty() { Some(evaluate(model, &dataset.test)?) } else { None };
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / dataset.train.len() as f64,
            test_acc,
            wall_ms: start.elapsed().as_millis() as u64,
        };
        log::debug!("{} epoch {epoch}: loss {:.4} acc {:?}", dataset.name, record.train_loss, record.test_acc);
        on_epoch(&record);
        log.epochs.push(record);
    }
    Ok(log)
}
