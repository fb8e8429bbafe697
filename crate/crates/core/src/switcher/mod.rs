//! Learned failure detector over a short history of tracker observations.
//!
//! Five encoders (score, box, result crop, response map, sentence vector)
//! feed a bidirectional GRU; a shared MLP scores each frame, softmax over
//! the real frames gives the attention weights, and a two-layer head maps
//! the mean attended feature to a failure probability.

mod buffer;
mod harvest;
mod model;
mod train;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use buffer::{relative_box, HistoryBuffer, SwitcherInput};
pub use harvest::{
    harvest_clips, label_windows, load_dataset, window_label, window_stride, LabeledWindow, SequenceLog,
    SwitchDataset, FAILED_IOU, HEALTHY_IOU,
};
pub use model::{
    Component, SwitcherForward, SwitcherOptions, SwitcherParams, ATTN_HIDDEN, BBOX_DIM, EMBED_DIM,
    FEATURE_DIM, GRU_HIDDEN, HEAD_HIDDEN, IMAGE_DIM, MAP_DIM, SCORE_DIM, pool,
};
pub use train::{accuracy, predict, train_from, train_switcher, EpochStats, SwitcherTrainConfig};

use crate::error::Result;
use crate::nn::{load_checkpoint, save_checkpoint};

pub const DEFAULT_HISTORY: usize = 20;
pub const DEFAULT_THRESHOLD: f64 = 0.7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchDecision {
    pub probability: f64,
    pub switched: bool,
    pub threshold: f64,
}

/// Trained parameters with their ablation options.
#[derive(Clone, Debug)]
pub struct AdaSwitcher {
    pub params: SwitcherParams,
    pub options: SwitcherOptions,
}

impl AdaSwitcher {
    pub fn new(params: SwitcherParams, options: SwitcherOptions) -> Self {
        Self { params, options }
    }

    /// `switched = probability > threshold`. An empty buffer yields
    /// probability 0.
    pub fn decide(&self, buffer: &HistoryBuffer, threshold: f64) -> Result<SwitchDecision> {
        let probability = if buffer.is_empty() {
            0.0
        } else {
            self.params.probability(&buffer.to_input(), &self.options)?
        };
        Ok(SwitchDecision {
            probability,
            switched: probability > threshold,
            threshold,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_checkpoint(path, &self.params)
    }

    pub fn load(path: &Path, options: SwitcherOptions) -> Result<Self> {
        let mut params = SwitcherParams::zeros();
        load_checkpoint(path, &mut params)?;
        Ok(Self { params, options })
    }
}

/// Score-only baseline: switch when the newest confidence falls below
/// `threshold_score`. Reported as probability `1 - confidence` against
/// threshold `1 - threshold_score`; an empty buffer never switches.
pub fn naive_decide(buffer: &HistoryBuffer, threshold_score: f64) -> SwitchDecision {
    let confidence = buffer.latest().map_or(1.0, |o| o.confidence);
    SwitchDecision {
        probability: 1.0 - confidence,
        switched: confidence < threshold_score,
        threshold: 1.0 - threshold_score,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::TrackerObservation;

    fn with_conf(c: f64) -> HistoryBuffer {
        let mut b = HistoryBuffer::new(4);
        let mut o = TrackerObservation::zeros();
        o.confidence = c;
        b.push(o);
        b
    }

    #[test]
    fn naive_examples() {
        assert!(!naive_decide(&with_conf(1.0), 0.9).switched);
        let d = naive_decide(&with_conf(0.2), 0.5);
        assert!(d.switched);
        assert!((d.probability - 0.8).abs() < 1e-12);
        assert!(!naive_decide(&HistoryBuffer::new(3), 0.5).switched);
    }

    #[test]
    fn sigmoid_range_bounds_thresholds() {
        let sw = AdaSwitcher::new(SwitcherParams::zeros(), SwitcherOptions::default());
        let b = with_conf(0.3);
        let d = sw.decide(&b, 1.2).unwrap();
        assert!(!d.switched);
        assert_eq!(d.probability, 0.5);
        assert!(sw.decide(&b, 0.0).unwrap().switched);
    }
}
