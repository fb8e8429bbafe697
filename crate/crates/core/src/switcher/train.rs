use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::harvest::SwitchDataset;
use super::model::{SwitcherOptions, SwitcherParams};
use crate::error::{Error, Result};
use crate::nn::{Adagrad, ParamSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwitcherTrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub options: SwitcherOptions,
}

impl Default for SwitcherTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 1e-5,
            batch_size: 1,
            epsilon: 1e-8,
            seed: 0,
            options: SwitcherOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub loss: f64,
    /// Running training accuracy at threshold 0.5.
    pub accuracy: f64,
}

/// BCE + Adagrad over shuffled windows.
pub fn train_switcher(dataset: &SwitchDataset, config: &SwitcherTrainConfig) -> Result<(SwitcherParams, Vec<EpochStats>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = SwitcherParams::xavier(&mut rng);
    train_from(params, dataset, config, &mut rng)
}

/// Continues training from `params`.
pub fn train_from(
    mut params: SwitcherParams,
    dataset: &SwitchDataset,
    config: &SwitcherTrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(SwitcherParams, Vec<EpochStats>)> {
    if dataset.is_empty() {
        return Err(Error::Invalid("switcher dataset is empty".into()));
    }
    let (healthy, failed) = dataset.class_counts();
    if healthy == 0 || failed == 0 {
        return Err(Error::Invalid(format!(
            "switcher dataset needs both classes, got {healthy} healthy and {failed} failed windows"
        )));
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    let mut opt = Adagrad::new(&params, config.learning_rate, config.epsilon);
    let mut grads = SwitcherParams::zeros();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in order.chunks(config.batch_size) {
            grads.zero();
            for &i in batch {
                let w = &dataset.windows[i];
                let input = dataset.input(w);
                let label = w.label as f64;
                let (loss, p) = params.loss_and_grad(&input, label, &config.options, &mut grads)?;
                loss_sum += loss;
                if (p > 0.5) == (w.label == 1) {
                    correct += 1;
                }
            }
            if batch.len() > 1 {
                let k = 1.0 / batch.len() as f64;
                for t in grads.tensors_mut() {
                    t.scale(k);
                }
            }
            opt.step(&mut params, &grads)?;
        }
        let stats = EpochStats {
            loss: loss_sum / dataset.len() as f64,
            accuracy: correct as f64 / dataset.len() as f64,
        };
        info!("switcher epoch {}: loss {:.4} acc {:.3}", epoch + 1, stats.loss, stats.accuracy);
        log.push(stats);
    }
    Ok((params, log))
}

/// Failure probability of every window, in dataset order.
pub fn predict(params: &SwitcherParams, dataset: &SwitchDataset, options: &SwitcherOptions) -> Result<Vec<f64>> {
    dataset
        .windows
        .par_iter()
        .map(|w| params.probability(&dataset.input(w), options))
        .collect()
}

/// Fraction of windows classified correctly at probability 0.5.
pub fn accuracy(params: &SwitcherParams, dataset: &SwitchDataset, options: &SwitcherOptions) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Invalid("cannot score an empty dataset".into()));
    }
    let probs = predict(params, dataset, options)?;
    let correct = probs
        .iter()
        .zip(&dataset.windows)
        .filter(|(p, w)| (**p > 0.5) == (w.label == 1))
        .count();
    Ok(correct as f64 / dataset.len() as f64)
}
