//! Minimal differentiable-network substrate.
//!
//! Everything is double precision. Layers expose explicit forward and
//! backward passes; gradients are stored in a value of the same type as the
//! parameters so optimizers and the gradient checker can walk both in
//! lock-step through [`ParamSet`].

mod activation;
mod adagrad;
mod checkpoint;
mod dense;
mod gradcheck;
mod gru;
pub mod linalg;
mod tensor;

pub use activation::{
    bce, bce_backward, sigmoid, sigmoid_backward, softmax, softmax_backward, tanh_backward,
    BCE_CLAMP,
};
pub use adagrad::{adagrad_update, Adagrad};
pub use checkpoint::{checkpoint_bytes, load_checkpoint, save_checkpoint};
pub use dense::DenseLayer;
pub use gradcheck::{grad_check, grad_check_sampled, GradCheckReport, FD_STEP};
pub use gru::{bigru_backward, bigru_forward, BiGruCache, GruCell, GruSequenceCache, GruStepCache};
pub use tensor::Tensor;

use rand::Rng;

/// A structured collection of parameter tensors with stable order and names.
pub trait ParamSet {
    fn named_tensors(&self) -> Vec<(String, &Tensor)>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor>;

    fn zero(&mut self) {
        for t in self.tensors_mut() {
            t.fill(0.0);
        }
    }

    fn num_params(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }
}

/// Prefixes names from a child parameter set.
pub fn prefixed<'a>(prefix: &str, set: &'a impl ParamSet) -> Vec<(String, &'a Tensor)> {
    set.named_tensors()
        .into_iter()
        .map(|(n, t)| (format!("{prefix}.{n}"), t))
        .collect()
}

/// Xavier-uniform fill for an `out x in` matrix.
pub fn xavier_uniform(t: &mut Tensor, fan_in: usize, fan_out: usize, rng: &mut impl Rng) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in t.data_mut() {
        *v = rng.gen_range(-limit..limit);
    }
}

impl ParamSet for Tensor {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        vec![("value".into(), self)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![self]
    }
}

impl<T: ParamSet> ParamSet for Vec<T> {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        self.iter()
            .enumerate()
            .flat_map(|(i, p)| prefixed(&i.to_string(), p))
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.iter_mut().flat_map(|p| p.tensors_mut()).collect()
    }
}
