//! Sentence embedding, grid grounding and template attention.

mod embed;
mod features;
mod model;
mod tanet;
mod train;

pub use embed::{SentenceEmbedding, SentenceEncoder, Vocabulary};
pub use features::{cell_span, grid_features, spatial_coords, GridFeatures};
pub use model::{anchor, cell_size, decode, target_for, Fusion, GroundingForward, GroundingModel, GroundingTarget};
pub use tanet::{argmax, attended_search_box, cell_center, is_uniform, tanet_attention};
pub use train::{train_grounding, GroundingSample, GroundingTrainConfig};

use std::path::Path;

use crate::error::Result;
use crate::frame::Frame;
use crate::geometry::BoundingBox;
use crate::nn::{load_checkpoint, save_checkpoint};
use crate::geometry::iou;
use crate::synth::{object_state, GroundingCase};
use crate::types::LanguageSentence;

/// Cells per side of the grounding grid.
pub const GRID: usize = 16;
pub const WORD_DIM: usize = 64;
pub const SENTENCE_HIDDEN: usize = 256;
pub const SENTENCE_DIM: usize = 512;
pub const VISUAL_DIM: usize = 38;
pub const SPATIAL_DIM: usize = 8;
pub const FUSION_DIM: usize = 128;
pub const HEAD_DIM: usize = 5;

/// A trained model with its vocabulary, ready for inference.
#[derive(Clone, Debug)]
pub struct Grounder {
    pub vocab: Vocabulary,
    pub model: GroundingModel,
    pub use_spatial_coords: bool,
}

impl Grounder {
    pub fn embed(&self, sentence: &LanguageSentence) -> Result<SentenceEmbedding> {
        self.model.encoder.embed(&self.vocab, sentence.tokens())
    }

    /// Box of the best cell plus the full cell score map.
    pub fn ground(&self, frame: &Frame, sentence: &SentenceEmbedding) -> Result<(BoundingBox, Vec<f64>)> {
        let fwd = self.model.forward(&grid_features(frame), sentence, self.use_spatial_coords)?;
        let (b, _) = decode(&fwd, (frame.width(), frame.height()));
        Ok((b, fwd.scores))
    }

    /// Writes `<stem>.params` and `<stem>.vocab`.
    pub fn save(&self, params: &Path, vocab: &Path) -> Result<()> {
        save_checkpoint(params, &self.model)?;
        self.vocab.write(vocab)
    }

    pub fn load(params: &Path, vocab: &Path, use_spatial_coords: bool) -> Result<Self> {
        let vocab = Vocabulary::read(vocab)?;
        let mut model = GroundingModel::zeros(vocab.rows());
        load_checkpoint(params, &mut model)?;
        Ok(Self {
            vocab,
            model,
            use_spatial_coords,
        })
    }
}

/// Held-out grounding quality.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GroundingEval {
    pub cases: usize,
    /// Cases with IoU >= 0.5.
    pub hits: usize,
    pub spatial_cases: usize,
    /// Spatial cases whose box center is nearer the target than its twin.
    pub spatial_correct: usize,
}

impl GroundingEval {
    pub fn hit_rate(&self) -> f64 {
        self.hits as f64 / self.cases.max(1) as f64
    }

    pub fn spatial_rate(&self) -> f64 {
        self.spatial_correct as f64 / self.spatial_cases.max(1) as f64
    }
}

pub fn evaluate_grounding(grounder: &Grounder, cases: &[GroundingCase]) -> Result<GroundingEval> {
    let mut e = GroundingEval::default();
    for c in cases {
        let emb = grounder.embed(&c.sentence)?;
        let (b, _) = grounder.ground(&c.frame, &emb)?;
        e.cases += 1;
        if iou(&b, &c.gt) >= 0.5 {
            e.hits += 1;
        }
        if c.spatial {
            e.spatial_cases += 1;
            let (bx, by) = b.center();
            let (gx, gy) = c.gt.center();
            let (ox, oy) = object_state(&c.spec, &c.spec.distractors[0], false, 0).bbox().center();
            if (bx - gx).hypot(by - gy) < (bx - ox).hypot(by - oy) {
                e.spatial_correct += 1;
            }
        }
    }
    Ok(e)
}
