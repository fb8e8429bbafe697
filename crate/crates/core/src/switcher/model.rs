use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffer::SwitcherInput;
use crate::error::Result;
use crate::nn::{
    bce, bce_backward, bigru_backward, bigru_forward, prefixed, sigmoid, sigmoid_backward, softmax,
    softmax_backward, tanh_backward, BiGruCache, DenseLayer, GruCell, ParamSet, Tensor,
};
use crate::types::{LANG_EMBED_DIM, RESPONSE_LEN, RESULT_IMAGE_LEN};

pub const SCORE_DIM: usize = 10;
pub const BBOX_DIM: usize = 10;
pub const IMAGE_DIM: usize = 512;
pub const MAP_DIM: usize = 512;
pub const EMBED_DIM: usize = 512;
/// Per-frame feature width, the sum of the five encoder outputs.
pub const FEATURE_DIM: usize = SCORE_DIM + BBOX_DIM + IMAGE_DIM + MAP_DIM + EMBED_DIM;
pub const GRU_HIDDEN: usize = 128;
pub const ATTN_HIDDEN: usize = 64;
pub const HEAD_HIDDEN: usize = 64;

/// One of the five per-frame input streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Score,
    BBox,
    Image,
    Map,
    Embedding,
}

impl Component {
    pub const ALL: [Component; 5] = [
        Component::Score,
        Component::BBox,
        Component::Image,
        Component::Map,
        Component::Embedding,
    ];

    pub fn input_dim(&self) -> usize {
        match self {
            Component::Score => 1,
            Component::BBox => 4,
            Component::Image => RESULT_IMAGE_LEN,
            Component::Map => RESPONSE_LEN,
            Component::Embedding => LANG_EMBED_DIM,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Component::Score => SCORE_DIM,
            Component::BBox => BBOX_DIM,
            Component::Image => IMAGE_DIM,
            Component::Map => MAP_DIM,
            Component::Embedding => EMBED_DIM,
        }
    }

    /// Columns of the per-frame feature vector owned by this component.
    pub fn range(&self) -> Range<usize> {
        let start: usize = Component::ALL
            .iter()
            .take_while(|c| *c != self)
            .map(|c| c.output_dim())
            .sum();
        start..start + self.output_dim()
    }

    fn index(&self) -> usize {
        Component::ALL.iter().position(|c| c == self).unwrap()
    }

    pub fn input<'a>(&self, input: &'a SwitcherInput) -> &'a [f64] {
        match self {
            Component::Score => &input.scores,
            Component::BBox => &input.bboxes,
            Component::Image => &input.images,
            Component::Map => &input.maps,
            Component::Embedding => &input.embeddings,
        }
    }

    fn input_mut<'a>(&self, input: &'a mut SwitcherInput) -> &'a mut Vec<f64> {
        match self {
            Component::Score => &mut input.scores,
            Component::BBox => &mut input.bboxes,
            Component::Image => &mut input.images,
            Component::Map => &mut input.maps,
            Component::Embedding => &mut input.embeddings,
        }
    }
}

/// Ablation toggles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwitcherOptions {
    /// When off, every real frame gets weight `1 / k`.
    pub use_frame_attention: bool,
    /// Components whose feature columns are forced to zero.
    pub ablate: Vec<Component>,
}

impl Default for SwitcherOptions {
    fn default() -> Self {
        Self {
            use_frame_attention: true,
            ablate: Vec::new(),
        }
    }
}

impl SwitcherOptions {
    fn active(&self, c: Component) -> bool {
        !self.ablate.contains(&c)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwitcherParams {
    pub encoders: [DenseLayer; 5],
    pub gru_forward: GruCell,
    pub gru_backward: GruCell,
    pub attn_hidden: DenseLayer,
    pub attn_out: DenseLayer,
    pub head_hidden: DenseLayer,
    pub head_out: DenseLayer,
}

/// Activations of one forward pass.
#[derive(Clone, Debug)]
pub struct SwitcherForward {
    pub n: usize,
    /// Encoder outputs after tanh, `n x d` each; empty when ablated.
    pub encoded: [Vec<f64>; 5],
    /// `n x FEATURE_DIM`.
    pub features: Vec<f64>,
    pub gru: BiGruCache,
    /// `n x ATTN_HIDDEN`; empty with attention off.
    pub attn_hidden: Vec<f64>,
    pub attn_scores: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Mean over frames of `alpha_i * o_i`.
    pub pooled: Vec<f64>,
    pub head_hidden: Vec<f64>,
    pub logit: f64,
    pub probability: f64,
}

impl SwitcherParams {
    pub fn zeros() -> Self {
        Self {
            encoders: Component::ALL.map(|c| DenseLayer::zeros(c.input_dim(), c.output_dim())),
            gru_forward: GruCell::zeros(FEATURE_DIM, GRU_HIDDEN),
            gru_backward: GruCell::zeros(FEATURE_DIM, GRU_HIDDEN),
            attn_hidden: DenseLayer::zeros(2 * GRU_HIDDEN, ATTN_HIDDEN),
            attn_out: DenseLayer::zeros(ATTN_HIDDEN, 1),
            head_hidden: DenseLayer::zeros(2 * GRU_HIDDEN, HEAD_HIDDEN),
            head_out: DenseLayer::zeros(HEAD_HIDDEN, 1),
        }
    }

    pub fn xavier(rng: &mut impl Rng) -> Self {
        Self {
            encoders: Component::ALL.map(|c| DenseLayer::xavier(c.input_dim(), c.output_dim(), rng)),
            gru_forward: GruCell::xavier(FEATURE_DIM, GRU_HIDDEN, rng),
            gru_backward: GruCell::xavier(FEATURE_DIM, GRU_HIDDEN, rng),
            attn_hidden: DenseLayer::xavier(2 * GRU_HIDDEN, ATTN_HIDDEN, rng),
            attn_out: DenseLayer::xavier(ATTN_HIDDEN, 1, rng),
            head_hidden: DenseLayer::xavier(2 * GRU_HIDDEN, HEAD_HIDDEN, rng),
            head_out: DenseLayer::xavier(HEAD_HIDDEN, 1, rng),
        }
    }

    pub fn encoder(&self, c: Component) -> &DenseLayer {
        &self.encoders[c.index()]
    }

    /// Per-frame features `[F_s, F_b, F_img, F_map, F_emb]`, `n x FEATURE_DIM`.
    pub fn encode(&self, input: &SwitcherInput, options: &SwitcherOptions) -> Result<([Vec<f64>; 5], Vec<f64>)> {
        let n = input.n;
        let mut encoded: [Vec<f64>; 5] = Default::default();
        let mut features = vec![0.0; n * FEATURE_DIM];
        for c in Component::ALL {
            if !options.active(c) {
                continue;
            }
            let mut y = self.encoder(c).forward_batch(c.input(input), n)?;
            for v in &mut y {
                *v = v.tanh();
            }
            let (range, d) = (c.range(), c.output_dim());
            for r in 0..n {
                features[r * FEATURE_DIM + range.start..r * FEATURE_DIM + range.end]
                    .copy_from_slice(&y[r * d..(r + 1) * d]);
            }
            encoded[c.index()] = y;
        }
        Ok((encoded, features))
    }

    pub fn forward(&self, input: &SwitcherInput, options: &SwitcherOptions) -> Result<SwitcherForward> {
        let n = input.n;
        let (encoded, features) = self.encode(input, options)?;
        let gru = bigru_forward(&self.gru_forward, &self.gru_backward, &features, n)?;
        let o = &gru.output;
        let (attn_hidden, attn_scores, alpha) = self.attention(o, &input.mask, options)?;
        let pooled = pool(o, &alpha);
        let mut head_hidden = self.head_hidden.forward(&pooled)?;
        for v in &mut head_hidden {
            *v = v.tanh();
        }
        let logit = self.head_out.forward(&head_hidden)?[0];
        Ok(SwitcherForward {
            n,
            encoded,
            features,
            gru,
            attn_hidden,
            attn_scores,
            alpha,
            pooled,
            head_hidden,
            logit,
            probability: sigmoid(logit),
        })
    }

    /// Frame weights over BiGRU outputs `o` (`n x 2H`): softmax of the
    /// shared MLP score over the rows with `mask` set, zero elsewhere.
    /// Returns the MLP hidden layer and raw scores too (empty with
    /// attention off).
    pub fn attention(
        &self,
        o: &[f64],
        mask: &[bool],
        options: &SwitcherOptions,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = mask.len();
        let real: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        let mut alpha = vec![0.0; n];
        let mut attn_hidden = Vec::new();
        let mut attn_scores = Vec::new();
        if options.use_frame_attention {
            attn_hidden = self.attn_hidden.forward_batch(o, n)?;
            for v in &mut attn_hidden {
                *v = v.tanh();
            }
            attn_scores = self.attn_out.forward_batch(&attn_hidden, n)?;
            if !real.is_empty() {
                let e: Vec<f64> = real.iter().map(|&i| attn_scores[i]).collect();
                for (&i, a) in real.iter().zip(softmax(&e)) {
                    alpha[i] = a;
                }
            }
        } else if !real.is_empty() {
            let w = 1.0 / real.len() as f64;
            for &i in &real {
                alpha[i] = w;
            }
        }
        Ok((attn_hidden, attn_scores, alpha))
    }

    pub fn probability(&self, input: &SwitcherInput, options: &SwitcherOptions) -> Result<f64> {
        Ok(self.forward(input, options)?.probability)
    }

    /// Backpropagates `d loss / d probability`, accumulating into `grads`.
    /// With `want_input_grads`, also returns the gradient w.r.t. every raw
    /// input value (mask copied from `input`).
    pub fn backward(
        &self,
        input: &SwitcherInput,
        fwd: &SwitcherForward,
        dprob: f64,
        options: &SwitcherOptions,
        grads: &mut SwitcherParams,
        want_input_grads: bool,
    ) -> Result<Option<SwitcherInput>> {
        let n = fwd.n;
        let od = 2 * GRU_HIDDEN;
        let dlogit = sigmoid_backward(fwd.probability, dprob);
        let dh = self
            .head_out
            .backward_batch(&fwd.head_hidden, &[dlogit], 1, &mut grads.head_out, true)?
            .expect("dx requested");
        let dh_pre: Vec<f64> = fwd.head_hidden.iter().zip(&dh).map(|(&y, &d)| tanh_backward(y, d)).collect();
        let dpooled = self
            .head_hidden
            .backward_batch(&fwd.pooled, &dh_pre, 1, &mut grads.head_hidden, true)?
            .expect("dx requested");

        let o = &fwd.gru.output;
        let mut dout = vec![0.0; n * od];
        let mut dalpha = vec![0.0; n];
        for i in 0..n {
            if !input.mask[i] {
                continue;
            }
            let oi = &o[i * od..(i + 1) * od];
            dalpha[i] = oi.iter().zip(&dpooled).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            let k = fwd.alpha[i] / n as f64;
            for (d, g) in dout[i * od..(i + 1) * od].iter_mut().zip(&dpooled) {
                *d = k * g;
            }
        }

        if options.use_frame_attention {
            let real: Vec<usize> = (0..n).filter(|&i| input.mask[i]).collect();
            let y: Vec<f64> = real.iter().map(|&i| fwd.alpha[i]).collect();
            let dy: Vec<f64> = real.iter().map(|&i| dalpha[i]).collect();
            let mut de = vec![0.0; n];
            for (&i, g) in real.iter().zip(softmax_backward(&y, &dy)) {
                de[i] = g;
            }
            let da = self
                .attn_out
                .backward_batch(&fwd.attn_hidden, &de, n, &mut grads.attn_out, true)?
                .expect("dx requested");
            let da_pre: Vec<f64> = fwd
                .attn_hidden
                .iter()
                .zip(&da)
                .map(|(&y, &d)| tanh_backward(y, d))
                .collect();
            let d_o = self
                .attn_hidden
                .backward_batch(o, &da_pre, n, &mut grads.attn_hidden, true)?
                .expect("dx requested");
            for (a, b) in dout.iter_mut().zip(&d_o) {
                *a += b;
            }
        }

        let dfeat = bigru_backward(
            &self.gru_forward,
            &self.gru_backward,
            &fwd.gru,
            &dout,
            &mut grads.gru_forward,
            &mut grads.gru_backward,
        )?;

        let mut input_grads = want_input_grads.then(|| {
            let mut g = SwitcherInput::zeros(n);
            g.mask = input.mask.clone();
            g
        });
        for c in Component::ALL {
            if !options.active(c) {
                continue;
            }
            let (range, d) = (c.range(), c.output_dim());
            let y = &fwd.encoded[c.index()];
            let mut dpre = vec![0.0; n * d];
            for r in 0..n {
                let src = &dfeat[r * FEATURE_DIM + range.start..r * FEATURE_DIM + range.end];
                for k in 0..d {
                    dpre[r * d + k] = tanh_backward(y[r * d + k], src[k]);
                }
            }
            let dx = self.encoder(c).backward_batch(
                c.input(input),
                &dpre,
                n,
                &mut grads.encoders[c.index()],
                want_input_grads,
            )?;
            if let (Some(g), Some(dx)) = (input_grads.as_mut(), dx) {
                *c.input_mut(g) = dx;
            }
        }
        Ok(input_grads)
    }

    /// BCE loss of one labelled window; accumulates its gradient into `grads`.
    pub fn loss_and_grad(
        &self,
        input: &SwitcherInput,
        label: f64,
        options: &SwitcherOptions,
        grads: &mut SwitcherParams,
    ) -> Result<(f64, f64)> {
        let fwd = self.forward(input, options)?;
        let p = fwd.probability;
        self.backward(input, &fwd, bce_backward(p, label), options, grads, false)?;
        Ok((bce(p, label), p))
    }
}

/// `(1 / n) * sum_i alpha_i * o_i` over the rows of `o`.
pub fn pool(o: &[f64], alpha: &[f64]) -> Vec<f64> {
    let n = alpha.len();
    let od = if n == 0 { 0 } else { o.len() / n };
    let mut pooled = vec![0.0; od];
    for (i, &a) in alpha.iter().enumerate() {
        if a != 0.0 {
            let k = a / n as f64;
            for (p, v) in pooled.iter_mut().zip(&o[i * od..(i + 1) * od]) {
                *p += k * v;
            }
        }
    }
    pooled
}

impl ParamSet for SwitcherParams {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let names = ["enc_score", "enc_bbox", "enc_image", "enc_map", "enc_embedding"];
        let mut out: Vec<(String, &Tensor)> = names
            .iter()
            .zip(&self.encoders)
            .flat_map(|(n, l)| prefixed(n, l))
            .collect();
        out.extend(prefixed("gru_forward", &self.gru_forward));
        out.extend(prefixed("gru_backward", &self.gru_backward));
        out.extend(prefixed("attn_hidden", &self.attn_hidden));
        out.extend(prefixed("attn_out", &self.attn_out));
        out.extend(prefixed("head_hidden", &self.head_hidden));
        out.extend(prefixed("head_out", &self.head_out));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = self.encoders.iter_mut().flat_map(|l| l.tensors_mut()).collect();
        out.extend(self.gru_forward.tensors_mut());
        out.extend(self.gru_backward.tensors_mut());
        out.extend(self.attn_hidden.tensors_mut());
        out.extend(self.attn_out.tensors_mut());
        out.extend(self.head_hidden.tensors_mut());
        out.extend(self.head_out.tensors_mut());
        out
    }
}

impl SwitcherInput {
    /// All raw values in component order.
    pub fn values(&self) -> Vec<f64> {
        Component::ALL.iter().flat_map(|c| c.input(self).iter().copied()).collect()
    }

    /// Copy with raw values replaced from [`values`](Self::values) order.
    pub fn with_values(&self, values: &[f64]) -> Self {
        let mut out = self.clone();
        let mut pos = 0;
        for c in Component::ALL {
            let dst = c.input_mut(&mut out);
            let len = dst.len();
            dst.copy_from_slice(&values[pos..pos + len]);
            pos += len;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn component_layout() {
        assert_eq!(FEATURE_DIM, 1556);
        assert_eq!(Component::Score.range(), 0..10);
        assert_eq!(Component::BBox.range(), 10..20);
        assert_eq!(Component::Image.range(), 20..532);
        assert_eq!(Component::Map.range(), 532..1044);
        assert_eq!(Component::Embedding.range(), 1044..1556);
    }

    #[test]
    fn zero_params_zero_inputs_give_zero_features() {
        let p = SwitcherParams::zeros();
        let (_, f) = p.encode(&SwitcherInput::zeros(3), &SwitcherOptions::default()).unwrap();
        assert!(f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn parameter_names_are_unique() {
        let p = SwitcherParams::zeros();
        let names: std::collections::BTreeSet<String> = p.named_tensors().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names.len(), p.named_tensors().len());
        assert_eq!(p.tensors_mut_len(), names.len());
    }

    impl SwitcherParams {
        fn tensors_mut_len(&self) -> usize {
            self.clone().tensors_mut().len()
        }
    }

    #[test]
    fn xavier_is_seeded() {
        let a = SwitcherParams::xavier(&mut ChaCha8Rng::seed_from_u64(3));
        let b = SwitcherParams::xavier(&mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }
}
