//! Mini-batch training with early stopping.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::cnn::{cross_entropy, CnnModel};
use crate::gesture::NUM_CLASSES;
use crate::rngutil::{derive_seed, rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 32,
            max_epochs: 50,
            early_stop_patience: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || self.adam_eps <= 0.0 {
            return Err(Error::InvalidConfig("adam betas must lie in [0, 1) and eps must be > 0".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_eps,
        }
    }
}

/// Flattened model inputs with class-index labels. Stored as f32 to keep
/// large corpora in memory; widened to f64 per batch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureSet {
    pub input_len: usize,
    pub inputs: Vec<f32>,
    pub labels: Vec<usize>,
}

impl FeatureSet {
    pub fn new(input_len: usize) -> Self {
        Self { input_len, inputs: Vec::new(), labels: Vec::new() }
    }

    pub fn push(&mut self, input: &[f64], label: usize) {
        assert_eq!(input.len(), self.input_len, "feature length");
        assert!(label < NUM_CLASSES, "label out of range");
        self.inputs.extend(input.iter().map(|&v| v as f32));
        self.labels.push(label);
    }

    pub fn extend(&mut self, other: &FeatureSet) {
        assert_eq!(other.input_len, self.input_len, "feature length");
        self.inputs.extend_from_slice(&other.inputs);
        self.labels.extend_from_slice(&other.labels);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f32] {
        &self.inputs[i * self.input_len..(i + 1) * self.input_len]
    }

    /// Widened inputs and labels for the given sample indices.
    pub fn gather(&self, idx: &[usize]) -> (Vec<f64>, Vec<usize>) {
        let mut x = Vec::with_capacity(idx.len() * self.input_len);
        for &i in idx {
            x.extend(self.sample(i).iter().map(|&v| v as f64));
        }
        (x, idx.iter().map(|&i| self.labels[i]).collect())
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut c = [0; NUM_CLASSES];
        self.labels.iter().for_each(|&l| c[l] += 1);
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were kept (1-based), if any epoch ran.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,train_acc,val_acc\n");
        for e in &self.epochs {
            let _ = writeln!(s, "{},{},{},{},{}", e.epoch, e.train_loss, e.val_loss, e.train_acc, e.val_acc);
        }
        s
    }
}

/// Loss and accuracy without dropout, evaluated in chunks.
pub fn evaluate_set(model: &CnnModel, set: &FeatureSet) -> Result<(f64, f64)> {
    if set.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let idx: Vec<usize> = (0..set.len()).collect();
    let (mut loss, mut correct) = (0.0, 0usize);
    for chunk in idx.chunks(64) {
        let (x, y) = set.gather(chunk);
        let pass = model.forward(&x, None)?;
        loss += cross_entropy(&pass, &y)? * chunk.len() as f64;
        correct += pass.predictions().iter().zip(&y).filter(|(p, &l)| p.class.index() == l).count();
    }
    Ok((loss / set.len() as f64, correct as f64 / set.len() as f64))
}

pub fn train(
    model: CnnModel,
    train_set: &FeatureSet,
    val_set: &FeatureSet,
    cfg: &TrainConfig,
) -> Result<(CnnModel, History)> {
    train_with_progress(model, train_set, val_set, cfg, |_| {})
}

/// Trains with Adam, calling `on_epoch` after every epoch. The returned
/// model carries the parameters with the lowest validation loss.
pub fn train_with_progress(
    mut model: CnnModel,
    train_set: &FeatureSet,
    val_set: &FeatureSet,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(CnnModel, History)> {
    cfg.validate()?;
    let mut history = History::default();
    if cfg.max_epochs == 0 {
        return Ok((model, history));
    }
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for set in [train_set, val_set] {
        if set.input_len != model.arch.input_len() {
            return Err(Error::ShapeMismatch(format!(
                "features of length {} for a model expecting {}",
                set.input_len,
                model.arch.input_len()
            )));
        }
    }

    let adam = cfg.adam();
    let mut state = AdamState::new(&model.arch);
    let mut best: Option<(f64, usize, super::cnn::Params)> = None;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        order.sort_unstable();
        order.shuffle(&mut rng(derive_seed(cfg.seed, epoch as u64)));
        let mut dropout_rng = rng(derive_seed(cfg.seed ^ 0xD0_0D, epoch as u64));
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let (x, y) = train_set.gather(batch);
            let pass = model.forward(&x, Some(&mut dropout_rng))?;
            let loss = cross_entropy(&pass, &y)?;
            let grads = model.backward(&pass, &y);
            adam_step(&mut model.params, &grads, &mut state, &adam)?;
            loss_sum += loss * batch.len() as f64;
            correct += pass.predictions().iter().zip(&y).filter(|(p, &l)| p.class.index() == l).count();
        }
        let (val_loss, val_acc) = evaluate_set(&model, val_set)?;
        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_loss,
            train_acc: correct as f64 / train_set.len() as f64,
            val_acc,
        };
        history.epochs.push(stats);
        on_epoch(&stats);

        if best.as_ref().is_none_or(|(l, _, _)| val_loss < *l) {
            best = Some((val_loss, epoch, model.params.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.early_stop_patience {
                history.stopped_early = true;
                break;
            }
        }
    }
    if let Some((_, epoch, params)) = best {
        model.params = params;
        history.best_epoch = Some(epoch);
    }
    Ok((model, history))
}
