use rand::Rng;

use super::embed::{SentenceEmbedding, SentenceEncoder};
use super::features::GridFeatures;
use super::{FUSION_DIM, GRID, HEAD_DIM, SENTENCE_DIM, SPATIAL_DIM, VISUAL_DIM};
use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox};
use crate::nn::linalg::{gemm_nt, gemm_tn, matvec_bias, matvec_t_acc};
use crate::nn::{prefixed, sigmoid, sigmoid_backward, softmax, tanh_backward, xavier_uniform, DenseLayer, ParamSet, Tensor};

const CELLS: usize = GRID * GRID;

/// The 1x1 fusion convolution over `[visual | sentence | spatial]`, stored
/// as one weight block per input group.
#[derive(Clone, Debug, PartialEq)]
pub struct Fusion {
    pub w_visual: Tensor,
    pub w_sentence: Tensor,
    pub w_spatial: Tensor,
    pub bias: Tensor,
}

impl Fusion {
    pub fn zeros() -> Self {
        Self {
            w_visual: Tensor::zeros(&[FUSION_DIM, VISUAL_DIM]),
            w_sentence: Tensor::zeros(&[FUSION_DIM, SENTENCE_DIM]),
            w_spatial: Tensor::zeros(&[FUSION_DIM, SPATIAL_DIM]),
            bias: Tensor::zeros(&[FUSION_DIM]),
        }
    }
}

impl ParamSet for Fusion {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("w_visual".into(), &self.w_visual),
            ("w_sentence".into(), &self.w_sentence),
            ("w_spatial".into(), &self.w_spatial),
            ("bias".into(), &self.bias),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w_visual, &mut self.w_sentence, &mut self.w_spatial, &mut self.bias]
    }
}

/// Sentence encoder, fusion layer and the per-cell head
/// `(score, tx, ty, tw, th)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundingModel {
    pub encoder: SentenceEncoder,
    pub fusion: Fusion,
    pub head: DenseLayer,
}

impl ParamSet for GroundingModel {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut v = prefixed("encoder", &self.encoder);
        v.extend(prefixed("fusion", &self.fusion));
        v.extend(prefixed("head", &self.head));
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.encoder.tensors_mut();
        v.extend(self.fusion.tensors_mut());
        v.extend(self.head.tensors_mut());
        v
    }
}

/// Everything the forward pass produced, kept for decoding and backward.
#[derive(Clone, Debug)]
pub struct GroundingForward {
    pub spatial: Vec<f64>,
    /// `CELLS x FUSION_DIM` post-tanh.
    pub hidden: Vec<f64>,
    /// `CELLS x HEAD_DIM` raw head outputs.
    pub outputs: Vec<f64>,
    /// Softmax over the cell score logits.
    pub scores: Vec<f64>,
}

/// Regression targets of a ground-truth box at its labelled cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundingTarget {
    pub cell: usize,
    pub offsets: [f64; 4],
}

pub fn cell_size(frame_size: (usize, usize)) -> (f64, f64) {
    (frame_size.0 as f64 / GRID as f64, frame_size.1 as f64 / GRID as f64)
}

/// The cell-sized anchor box of cell `c`.
pub fn anchor(c: usize, frame_size: (usize, usize)) -> BoundingBox {
    let (cw, ch) = cell_size(frame_size);
    BoundingBox::new((c % GRID) as f64 * cw, (c / GRID) as f64 * ch, cw, ch)
}

const TIE_EPS: f64 = 1e-12;

/// Labels the anchor of maximum IoU with `gt`. Equal IoUs go to the anchor
/// whose center is nearest the gt center, then to the lowest row-major
/// index.
pub fn target_for(gt: &BoundingBox, frame_size: (usize, usize)) -> Result<GroundingTarget> {
    gt.validate()?;
    if gt.area() <= 0.0 {
        return Err(Error::Invalid(format!("ground-truth box {gt:?} has no area")));
    }
    let (fw, fh) = (frame_size.0 as f64, frame_size.1 as f64);
    let (gx, gy) = gt.center();
    if !(0.0..fw).contains(&gx) || !(0.0..fh).contains(&gy) {
        return Err(Error::Invalid(format!("ground-truth box {gt:?} lies outside the {fw}x{fh} frame")));
    }
    let mut best = (f64::NEG_INFINITY, f64::INFINITY, 0usize);
    for c in 0..CELLS {
        let a = anchor(c, frame_size);
        let v = iou(&a, gt);
        let (ax, ay) = a.center();
        let d = (ax - gx).powi(2) + (ay - gy).powi(2);
        if v > best.0 + TIE_EPS || ((v - best.0).abs() <= TIE_EPS && d < best.1) {
            best = (v, d, c);
        }
    }
    let cell = best.2;
    let (cw, ch) = cell_size(frame_size);
    let (col, row) = ((cell % GRID) as f64, (cell / GRID) as f64);
    Ok(GroundingTarget {
        cell,
        offsets: [gx / cw - col, gy / ch - row, (gt.w / cw).ln(), (gt.h / ch).ln()],
    })
}

impl GroundingModel {
    pub fn zeros(vocab_rows: usize) -> Self {
        Self {
            encoder: SentenceEncoder::zeros(vocab_rows),
            fusion: Fusion::zeros(),
            head: DenseLayer::zeros(FUSION_DIM, HEAD_DIM),
        }
    }

    /// Xavier-uniform matrices (the fusion blocks share the fan of the
    /// whole 558-input layer), zero biases.
    pub fn xavier(vocab_rows: usize, rng: &mut impl Rng) -> Self {
        let encoder = SentenceEncoder::xavier(vocab_rows, rng);
        let mut fusion = Fusion::zeros();
        let fan_in = VISUAL_DIM + SENTENCE_DIM + SPATIAL_DIM;
        xavier_uniform(&mut fusion.w_visual, fan_in, FUSION_DIM, rng);
        xavier_uniform(&mut fusion.w_sentence, fan_in, FUSION_DIM, rng);
        xavier_uniform(&mut fusion.w_spatial, fan_in, FUSION_DIM, rng);
        Self {
            encoder,
            fusion,
            head: DenseLayer::xavier(FUSION_DIM, HEAD_DIM, rng),
        }
    }

    /// Scores every cell. With `use_spatial` false the spatial block is
    /// all zeros.
    pub fn forward(
        &self,
        visual: &GridFeatures,
        sentence: &SentenceEmbedding,
        use_spatial: bool,
    ) -> Result<GroundingForward> {
        if visual.data.len() != CELLS * VISUAL_DIM {
            return Err(Error::shape("grid features", &[CELLS, VISUAL_DIM], &[visual.data.len() / VISUAL_DIM, VISUAL_DIM]));
        }
        let spatial = if use_spatial {
            super::features::spatial_coords()
        } else {
            vec![0.0; CELLS * SPATIAL_DIM]
        };
        let mut shared = vec![0.0; FUSION_DIM];
        matvec_bias(self.fusion.w_sentence.data(), self.fusion.bias.data(), &sentence.pooled, &mut shared);
        let mut hidden = Vec::with_capacity(CELLS * FUSION_DIM);
        for _ in 0..CELLS {
            hidden.extend_from_slice(&shared);
        }
        gemm_nt(CELLS, VISUAL_DIM, FUSION_DIM, &visual.data, self.fusion.w_visual.data(), 1.0, &mut hidden);
        gemm_nt(CELLS, SPATIAL_DIM, FUSION_DIM, &spatial, self.fusion.w_spatial.data(), 1.0, &mut hidden);
        hidden.iter_mut().for_each(|v| *v = v.tanh());
        let outputs = self.head.forward_batch(&hidden, CELLS)?;
        let logits: Vec<f64> = outputs.chunks(HEAD_DIM).map(|o| o[0]).collect();
        Ok(GroundingForward {
            spatial,
            hidden,
            scores: softmax(&logits),
            outputs,
        })
    }

    /// Cross-entropy of the cell softmax against the labelled cell plus
    /// `box_weight` times the squared offset error at that cell.
    pub fn loss(fwd: &GroundingForward, target: &GroundingTarget, box_weight: f64) -> f64 {
        let o = &fwd.outputs[target.cell * HEAD_DIM..(target.cell + 1) * HEAD_DIM];
        let t = &target.offsets;
        let ce = -fwd.scores[target.cell].max(f64::MIN_POSITIVE).ln();
        let reg = (sigmoid(o[1]) - t[0]).powi(2)
            + (sigmoid(o[2]) - t[1]).powi(2)
            + (o[3] - t[2]).powi(2)
            + (o[4] - t[3]).powi(2);
        ce + box_weight * reg
    }

    /// Accumulates `scale * d loss` into `grads`.
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &self,
        visual: &GridFeatures,
        sentence: &SentenceEmbedding,
        fwd: &GroundingForward,
        target: &GroundingTarget,
        box_weight: f64,
        scale: f64,
        grads: &mut GroundingModel,
    ) -> Result<()> {
        let mut dout = vec![0.0; CELLS * HEAD_DIM];
        for c in 0..CELLS {
            let onehot = if c == target.cell { 1.0 } else { 0.0 };
            dout[c * HEAD_DIM] = scale * (fwd.scores[c] - onehot);
        }
        let base = target.cell * HEAD_DIM;
        let o = &fwd.outputs[base..base + HEAD_DIM];
        let t = &target.offsets;
        for k in 0..2 {
            let s = sigmoid(o[1 + k]);
            dout[base + 1 + k] = scale * sigmoid_backward(s, 2.0 * box_weight * (s - t[k]));
        }
        for k in 2..4 {
            dout[base + 1 + k] = scale * 2.0 * box_weight * (o[1 + k] - t[k]);
        }
        let dh = self
            .head
            .backward_batch(&fwd.hidden, &dout, CELLS, &mut grads.head, true)?
            .unwrap_or_default();
        let da: Vec<f64> = fwd.hidden.iter().zip(&dh).map(|(&y, &d)| tanh_backward(y, d)).collect();
        gemm_tn(FUSION_DIM, CELLS, VISUAL_DIM, &da, &visual.data, 1.0, grads.fusion.w_visual.data_mut());
        gemm_tn(FUSION_DIM, CELLS, SPATIAL_DIM, &da, &fwd.spatial, 1.0, grads.fusion.w_spatial.data_mut());
        let mut dshared = vec![0.0; FUSION_DIM];
        for row in da.chunks(FUSION_DIM) {
            for (s, d) in dshared.iter_mut().zip(row) {
                *s += d;
            }
        }
        for (b, d) in grads.fusion.bias.data_mut().iter_mut().zip(&dshared) {
            *b += d;
        }
        let gw = grads.fusion.w_sentence.data_mut();
        for (o, &d) in dshared.iter().enumerate() {
            for (g, s) in gw[o * SENTENCE_DIM..(o + 1) * SENTENCE_DIM].iter_mut().zip(&sentence.pooled) {
                *g += d * s;
            }
        }
        let mut dpooled = vec![0.0; SENTENCE_DIM];
        matvec_t_acc(self.fusion.w_sentence.data(), &dshared, &mut dpooled);
        self.encoder.backward(sentence, &dpooled, &mut grads.encoder)
    }
}

/// Box decoded from the argmax cell (lowest index on ties) and its score.
pub fn decode(fwd: &GroundingForward, frame_size: (usize, usize)) -> (BoundingBox, f64) {
    let mut best = 0;
    for c in 1..CELLS {
        if fwd.scores[c] > fwd.scores[best] {
            best = c;
        }
    }
    let o = &fwd.outputs[best * HEAD_DIM..(best + 1) * HEAD_DIM];
    let (cw, ch) = cell_size(frame_size);
    let (col, row) = ((best % GRID) as f64, (best / GRID) as f64);
    let cx = (col + sigmoid(o[1])) * cw;
    let cy = (row + sigmoid(o[2])) * ch;
    let w = cw * o[3].clamp(-20.0, 20.0).exp();
    let h = ch * o[4].clamp(-20.0, 20.0).exp();
    (BoundingBox::from_center(cx, cy, w, h), fwd.scores[best])
}
