use rand::Rng;

use super::linalg::{gemm_nn, gemm_nt, gemm_tn, matvec_bias, matvec_t_acc};
use super::{xavier_uniform, ParamSet, Tensor};
use crate::error::{Error, Result};

/// Fully connected layer `y = W x + b` with `W: out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl DenseLayer {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[output, input]),
            bias: Tensor::zeros(&[output]),
        }
    }

    /// Xavier-uniform weights, zero bias.
    pub fn xavier(input: usize, output: usize, rng: &mut impl Rng) -> Self {
        let mut layer = Self::zeros(input, output);
        xavier_uniform(&mut layer.weight, input, output, rng);
        layer
    }

    pub fn identity(n: usize) -> Self {
        let mut layer = Self::zeros(n, n);
        for i in 0..n {
            layer.weight.data_mut()[i * n + i] = 1.0;
        }
        layer
    }

    pub fn input_size(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_size(&self) -> usize {
        self.weight.rows()
    }

    fn check_input(&self, len: usize, rows: usize) -> Result<()> {
        if len != rows * self.input_size() {
            return Err(Error::shape(
                "dense input",
                &[rows, self.input_size()],
                &[rows, len / rows.max(1)],
            ));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x.len(), 1)?;
        let mut y = vec![0.0; self.output_size()];
        matvec_bias(self.weight.data(), self.bias.data(), x, &mut y);
        Ok(y)
    }

    /// Exact gradients: returns `dx` and the parameter gradients.
    pub fn backward(&self, x: &[f64], dy: &[f64]) -> Result<(Vec<f64>, DenseLayer)> {
        self.check_input(x.len(), 1)?;
        if dy.len() != self.output_size() {
            return Err(Error::shape("dense output grad", &[self.output_size()], &[dy.len()]));
        }
        let mut dx = vec![0.0; self.input_size()];
        matvec_t_acc(self.weight.data(), dy, &mut dx);
        let mut grads = DenseLayer::zeros(self.input_size(), self.output_size());
        let n_in = self.input_size();
        for (o, &g) in dy.iter().enumerate() {
            let row = &mut grads.weight.data_mut()[o * n_in..(o + 1) * n_in];
            for (r, xi) in row.iter_mut().zip(x) {
                *r = g * xi;
            }
        }
        grads.bias.data_mut().copy_from_slice(dy);
        Ok((dx, grads))
    }

    /// Row-batched forward: `x` is `rows x in`, result `rows x out`.
    pub fn forward_batch(&self, x: &[f64], rows: usize) -> Result<Vec<f64>> {
        self.check_input(x.len(), rows)?;
        let out = self.output_size();
        let mut y = Vec::with_capacity(rows * out);
        for _ in 0..rows {
            y.extend_from_slice(self.bias.data());
        }
        gemm_nt(rows, self.input_size(), out, x, self.weight.data(), 1.0, &mut y);
        Ok(y)
    }

    /// Row-batched backward. Accumulates parameter gradients into `grads`;
    /// returns `dx` (`rows x in`) when `want_dx`.
    pub fn backward_batch(
        &self,
        x: &[f64],
        dy: &[f64],
        rows: usize,
        grads: &mut DenseLayer,
        want_dx: bool,
    ) -> Result<Option<Vec<f64>>> {
        self.check_input(x.len(), rows)?;
        let (n_in, n_out) = (self.input_size(), self.output_size());
        if dy.len() != rows * n_out {
            return Err(Error::shape("dense output grad", &[rows, n_out], &[dy.len() / n_out.max(1), n_out]));
        }
        gemm_tn(n_out, rows, n_in, dy, x, 1.0, grads.weight.data_mut());
        let db = grads.bias.data_mut();
        for r in 0..rows {
            for (b, g) in db.iter_mut().zip(&dy[r * n_out..(r + 1) * n_out]) {
                *b += g;
            }
        }
        if !want_dx {
            return Ok(None);
        }
        let mut dx = vec![0.0; rows * n_in];
        gemm_nn(rows, n_out, n_in, dy, self.weight.data(), 0.0, &mut dx);
        Ok(Some(dx))
    }
}

impl ParamSet for DenseLayer {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        vec![("weight".into(), &self.weight), ("bias".into(), &self.bias)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.bias]
    }
}
