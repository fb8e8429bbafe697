use rand::Rng;

use super::activation::sigmoid;
use super::linalg::{dot, gemm_nn, gemm_nt, gemm_tn, matvec_t_acc};
use super::{xavier_uniform, ParamSet, Tensor};
use crate::error::{Error, Result};

/// Gated recurrent unit with gates stacked `[z, r, candidate]`.
///
/// ```text
/// z  = sigmoid(Wz x + Uz h + bz)
/// r  = sigmoid(Wr x + Ur h + br)
/// h~ = tanh(Wc x + Uc (r * h) + bc)
/// h' = (1 - z) * h + z * h~
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct GruCell {
    /// `3H x I`
    pub w_input: Tensor,
    /// `3H x H`
    pub w_hidden: Tensor,
    /// `3H`
    pub bias: Tensor,
}

/// Activations of one step, enough for the backward pass.
#[derive(Clone, Debug)]
pub struct GruStepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub rh: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

/// Activations of a full sequence, stored as `n x H` (or `n x I`) matrices.
#[derive(Clone, Debug)]
pub struct GruSequenceCache {
    pub steps: usize,
    xs: Vec<f64>,
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    rh: Vec<f64>,
    c: Vec<f64>,
    hs: Vec<f64>,
}

impl GruSequenceCache {
    /// Hidden states, `n x H`.
    pub fn states(&self) -> &[f64] {
        &self.hs
    }
}

impl GruCell {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_input: Tensor::zeros(&[3 * hidden, input]),
            w_hidden: Tensor::zeros(&[3 * hidden, hidden]),
            bias: Tensor::zeros(&[3 * hidden]),
        }
    }

    pub fn xavier(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut cell = Self::zeros(input, hidden);
        xavier_uniform(&mut cell.w_input, input, hidden, rng);
        xavier_uniform(&mut cell.w_hidden, hidden, hidden, rng);
        cell
    }

    pub fn input_size(&self) -> usize {
        self.w_input.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.w_hidden.cols()
    }

    fn check(&self, x: usize, h: usize) -> Result<()> {
        if x != self.input_size() {
            return Err(Error::shape("gru input", &[self.input_size()], &[x]));
        }
        if h != self.hidden_size() {
            return Err(Error::shape("gru state", &[self.hidden_size()], &[h]));
        }
        Ok(())
    }

    /// Gates from a precomputed input projection `gx = W x + b` (length 3H).
    fn step_from_projection(&self, gx: &[f64], h_prev: &[f64], out: StepOut<'_>) {
        let hd = self.hidden_size();
        let u = self.w_hidden.data();
        for i in 0..hd {
            out.z[i] = sigmoid(gx[i] + dot(&u[i * hd..(i + 1) * hd], h_prev));
            out.r[i] = sigmoid(gx[hd + i] + dot(&u[(hd + i) * hd..(hd + i + 1) * hd], h_prev));
            out.rh[i] = out.r[i] * h_prev[i];
        }
        for i in 0..hd {
            let row = 2 * hd + i;
            out.c[i] = (gx[row] + dot(&u[row * hd..(row + 1) * hd], out.rh)).tanh();
            out.h[i] = (1.0 - out.z[i]) * h_prev[i] + out.z[i] * out.c[i];
        }
    }

    fn input_projection(&self, x: &[f64]) -> Vec<f64> {
        let mut gx = self.bias.data().to_vec();
        gemm_nt(1, self.input_size(), gx.len(), x, self.w_input.data(), 1.0, &mut gx);
        gx
    }

    pub fn step(&self, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
        Ok(self.step_cached(x, h_prev)?.h)
    }

    pub fn step_cached(&self, x: &[f64], h_prev: &[f64]) -> Result<GruStepCache> {
        self.check(x.len(), h_prev.len())?;
        let hd = self.hidden_size();
        let gx = self.input_projection(x);
        let mut cache = GruStepCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            z: vec![0.0; hd],
            r: vec![0.0; hd],
            rh: vec![0.0; hd],
            c: vec![0.0; hd],
            h: vec![0.0; hd],
        };
        self.step_from_projection(
            &gx,
            h_prev,
            StepOut {
                z: &mut cache.z,
                r: &mut cache.r,
                rh: &mut cache.rh,
                c: &mut cache.c,
                h: &mut cache.h,
            },
        );
        Ok(cache)
    }

    /// Pre-activation gradient `[dz, dr, dc]` and the part of `dh_prev` that
    /// does not flow through the input projection.
    fn step_backward_core(
        &self,
        h_prev: &[f64],
        z: &[f64],
        r: &[f64],
        c: &[f64],
        dh: &[f64],
        da: &mut [f64],
        dh_prev: &mut [f64],
    ) {
        let hd = self.hidden_size();
        let u = self.w_hidden.data();
        for i in 0..hd {
            let dz = dh[i] * (c[i] - h_prev[i]);
            let dc = dh[i] * z[i];
            dh_prev[i] = dh[i] * (1.0 - z[i]);
            da[i] = dz * z[i] * (1.0 - z[i]);
            da[2 * hd + i] = dc * (1.0 - c[i] * c[i]);
        }
        let mut drh = vec![0.0; hd];
        matvec_t_acc(&u[2 * hd * hd..], &da[2 * hd..], &mut drh);
        for i in 0..hd {
            let dr = drh[i] * h_prev[i];
            dh_prev[i] += drh[i] * r[i];
            da[hd + i] = dr * r[i] * (1.0 - r[i]);
        }
        matvec_t_acc(&u[..2 * hd * hd], &da[..2 * hd], dh_prev);
    }

    /// Backward through one step. Parameter gradients accumulate into
    /// `grads`; returns `(dx, dh_prev)`.
    pub fn step_backward(
        &self,
        cache: &GruStepCache,
        dh: &[f64],
        grads: &mut GruCell,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let hd = self.hidden_size();
        if dh.len() != hd {
            return Err(Error::shape("gru state grad", &[hd], &[dh.len()]));
        }
        let mut da = vec![0.0; 3 * hd];
        let mut dh_prev = vec![0.0; hd];
        self.step_backward_core(&cache.h_prev, &cache.z, &cache.r, &cache.c, dh, &mut da, &mut dh_prev);
        gemm_tn(3 * hd, 1, self.input_size(), &da, &cache.x, 1.0, grads.w_input.data_mut());
        let gw = grads.w_hidden.data_mut();
        gemm_tn(2 * hd, 1, hd, &da[..2 * hd], &cache.h_prev, 1.0, &mut gw[..2 * hd * hd]);
        gemm_tn(hd, 1, hd, &da[2 * hd..], &cache.rh, 1.0, &mut gw[2 * hd * hd..]);
        for (b, g) in grads.bias.data_mut().iter_mut().zip(&da) {
            *b += g;
        }
        let mut dx = vec![0.0; self.input_size()];
        gemm_nn(1, 3 * hd, self.input_size(), &da, self.w_input.data(), 0.0, &mut dx);
        Ok((dx, dh_prev))
    }

    /// Runs the cell over `xs` (`n x I`) from a zero initial state. With
    /// `reverse` the sequence is consumed last-to-first but the returned
    /// states stay indexed by input position.
    pub fn forward_sequence(&self, xs: &[f64], n: usize, reverse: bool) -> Result<GruSequenceCache> {
        let (ni, hd) = (self.input_size(), self.hidden_size());
        if n == 0 {
            return Err(Error::Invalid("empty sequence".into()));
        }
        if xs.len() != n * ni {
            return Err(Error::shape("gru sequence", &[n, ni], &[xs.len() / ni.max(1), ni]));
        }
        let mut gx = Vec::with_capacity(n * 3 * hd);
        for _ in 0..n {
            gx.extend_from_slice(self.bias.data());
        }
        gemm_nt(n, ni, 3 * hd, xs, self.w_input.data(), 1.0, &mut gx);
        let mut cache = GruSequenceCache {
            steps: n,
            xs: xs.to_vec(),
            h_prev: vec![0.0; n * hd],
            z: vec![0.0; n * hd],
            r: vec![0.0; n * hd],
            rh: vec![0.0; n * hd],
            c: vec![0.0; n * hd],
            hs: vec![0.0; n * hd],
        };
        let mut h = vec![0.0; hd];
        for k in 0..n {
            let t = if reverse { n - 1 - k } else { k };
            let s = t * hd..(t + 1) * hd;
            cache.h_prev[s.clone()].copy_from_slice(&h);
            self.step_from_projection(
                &gx[t * 3 * hd..(t + 1) * 3 * hd],
                &h,
                StepOut {
                    z: &mut cache.z[s.clone()],
                    r: &mut cache.r[s.clone()],
                    rh: &mut cache.rh[s.clone()],
                    c: &mut cache.c[s.clone()],
                    h: &mut cache.hs[s.clone()],
                },
            );
            h.copy_from_slice(&cache.hs[s]);
        }
        Ok(cache)
    }

    /// BPTT for [`forward_sequence`](Self::forward_sequence). `dhs` holds
    /// the loss gradient w.r.t. each state (`n x H`); returns `dxs`.
    pub fn backward_sequence(
        &self,
        cache: &GruSequenceCache,
        dhs: &[f64],
        reverse: bool,
        grads: &mut GruCell,
    ) -> Result<Vec<f64>> {
        let (ni, hd, n) = (self.input_size(), self.hidden_size(), cache.steps);
        if dhs.len() != n * hd {
            return Err(Error::shape("gru state grads", &[n, hd], &[dhs.len() / hd.max(1), hd]));
        }
        let mut da_all = vec![0.0; n * 3 * hd];
        let mut carry = vec![0.0; hd];
        let mut dh = vec![0.0; hd];
        for k in (0..n).rev() {
            let t = if reverse { n - 1 - k } else { k };
            let s = t * hd..(t + 1) * hd;
            for ((d, a), b) in dh.iter_mut().zip(&dhs[s.clone()]).zip(&carry) {
                *d = a + b;
            }
            self.step_backward_core(
                &cache.h_prev[s.clone()],
                &cache.z[s.clone()],
                &cache.r[s.clone()],
                &cache.c[s],
                &dh,
                &mut da_all[t * 3 * hd..(t + 1) * 3 * hd],
                &mut carry,
            );
        }
        gemm_tn(3 * hd, n, ni, &da_all, &cache.xs, 1.0, grads.w_input.data_mut());
        let mut da_zr = Vec::with_capacity(n * 2 * hd);
        let mut da_c = Vec::with_capacity(n * hd);
        for t in 0..n {
            let row = &da_all[t * 3 * hd..(t + 1) * 3 * hd];
            da_zr.extend_from_slice(&row[..2 * hd]);
            da_c.extend_from_slice(&row[2 * hd..]);
        }
        let gw = grads.w_hidden.data_mut();
        gemm_tn(2 * hd, n, hd, &da_zr, &cache.h_prev, 1.0, &mut gw[..2 * hd * hd]);
        gemm_tn(hd, n, hd, &da_c, &cache.rh, 1.0, &mut gw[2 * hd * hd..]);
        let gb = grads.bias.data_mut();
        for t in 0..n {
            for (b, g) in gb.iter_mut().zip(&da_all[t * 3 * hd..(t + 1) * 3 * hd]) {
                *b += g;
            }
        }
        let mut dxs = vec![0.0; n * ni];
        gemm_nn(n, 3 * hd, ni, &da_all, self.w_input.data(), 0.0, &mut dxs);
        Ok(dxs)
    }
}

struct StepOut<'a> {
    z: &'a mut [f64],
    r: &'a mut [f64],
    rh: &'a mut [f64],
    c: &'a mut [f64],
    h: &'a mut [f64],
}

impl ParamSet for GruCell {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("w_input".into(), &self.w_input),
            ("w_hidden".into(), &self.w_hidden),
            ("bias".into(), &self.bias),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w_input, &mut self.w_hidden, &mut self.bias]
    }
}

/// Forward and backward direction caches plus the concatenated output.
#[derive(Clone, Debug)]
pub struct BiGruCache {
    pub forward: GruSequenceCache,
    pub backward: GruSequenceCache,
    /// `n x 2H`: forward state then backward state per position.
    pub output: Vec<f64>,
}

pub fn bigru_forward(fwd: &GruCell, bwd: &GruCell, xs: &[f64], n: usize) -> Result<BiGruCache> {
    if fwd.input_size() != bwd.input_size() || fwd.hidden_size() != bwd.hidden_size() {
        return Err(Error::shape(
            "bigru cells",
            &[fwd.input_size(), fwd.hidden_size()],
            &[bwd.input_size(), bwd.hidden_size()],
        ));
    }
    let f = fwd.forward_sequence(xs, n, false)?;
    let b = bwd.forward_sequence(xs, n, true)?;
    let hd = fwd.hidden_size();
    let mut output = Vec::with_capacity(n * 2 * hd);
    for t in 0..n {
        output.extend_from_slice(&f.hs[t * hd..(t + 1) * hd]);
        output.extend_from_slice(&b.hs[t * hd..(t + 1) * hd]);
    }
    Ok(BiGruCache {
        forward: f,
        backward: b,
        output,
    })
}

/// Returns `dxs`; cell gradients accumulate into `gf` and `gb`.
pub fn bigru_backward(
    fwd: &GruCell,
    bwd: &GruCell,
    cache: &BiGruCache,
    dout: &[f64],
    gf: &mut GruCell,
    gb: &mut GruCell,
) -> Result<Vec<f64>> {
    let hd = fwd.hidden_size();
    let n = cache.forward.steps;
    if dout.len() != n * 2 * hd {
        return Err(Error::shape("bigru output grads", &[n, 2 * hd], &[dout.len() / (2 * hd), 2 * hd]));
    }
    let mut df = Vec::with_capacity(n * hd);
    let mut db = Vec::with_capacity(n * hd);
    for t in 0..n {
        let row = &dout[t * 2 * hd..(t + 1) * 2 * hd];
        df.extend_from_slice(&row[..hd]);
        db.extend_from_slice(&row[hd..]);
    }
    let mut dx = fwd.backward_sequence(&cache.forward, &df, false, gf)?;
    let dxb = bwd.backward_sequence(&cache.backward, &db, true, gb)?;
    for (a, b) in dx.iter_mut().zip(&dxb) {
        *a += b;
    }
    Ok(dx)
}
