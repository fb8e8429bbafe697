use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::embed::Vocabulary;
use super::features::{grid_features, GridFeatures};
use super::model::{target_for, GroundingModel, GroundingTarget};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::geometry::BoundingBox;
use crate::nn::{Adagrad, ParamSet};
use crate::types::LanguageSentence;

/// One training triple with its features precomputed.
#[derive(Clone, Debug)]
pub struct GroundingSample {
    pub features: GridFeatures,
    pub rows: Vec<usize>,
    pub target: GroundingTarget,
}

impl GroundingSample {
    pub fn new(frame: &Frame, sentence: &LanguageSentence, gt: &BoundingBox, vocab: &Vocabulary) -> Result<Self> {
        Ok(Self {
            features: grid_features(frame),
            rows: sentence.tokens().iter().map(|t| vocab.index(t)).collect(),
            target: target_for(gt, (frame.width(), frame.height()))?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundingTrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epsilon: f64,
    /// Weight of the offset regression term against the cross-entropy.
    pub box_weight: f64,
    pub use_spatial_coords: bool,
    pub seed: u64,
}

impl Default for GroundingTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            learning_rate: 1e-4,
            batch_size: 5,
            epsilon: 1e-8,
            box_weight: 1.0,
            use_spatial_coords: true,
            seed: 0,
        }
    }
}

/// Trains a fresh model; returns it with the mean loss of every epoch.
/// Each batch gradient is the mean over its samples.
pub fn train_grounding(
    samples: &[GroundingSample],
    vocab_rows: usize,
    config: &GroundingTrainConfig,
) -> Result<(GroundingModel, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::Invalid("grounding corpus is empty".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = GroundingModel::xavier(vocab_rows, &mut rng);
    let mut opt = Adagrad::new(&model, config.learning_rate, config.epsilon);
    let mut grads = GroundingModel::zeros(vocab_rows);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.zero();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let s = &samples[i];
                let emb = model.encoder.embed_rows(&s.rows)?;
                let fwd = model.forward(&s.features, &emb, config.use_spatial_coords)?;
                total += GroundingModel::loss(&fwd, &s.target, config.box_weight);
                model.backward(&s.features, &emb, &fwd, &s.target, config.box_weight, scale, &mut grads)?;
            }
            opt.step(&mut model, &grads)?;
        }
        let mean = total / samples.len() as f64;
        log::debug!("grounding epoch {} loss {mean:.5}", epoch + 1);
        log.push(mean);
    }
    Ok((model, log))
}
