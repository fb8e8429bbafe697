use super::{ParamSet, Tensor};
use crate::error::{Error, Result};

/// Adagrad optimizer state: one squared-gradient accumulator per parameter.
#[derive(Clone, Debug)]
pub struct Adagrad<P> {
    pub accumulators: P,
    pub learning_rate: f64,
    pub epsilon: f64,
}

impl<P: ParamSet + Clone> Adagrad<P> {
    pub fn new(params: &P, learning_rate: f64, epsilon: f64) -> Self {
        let mut accumulators = params.clone();
        accumulators.zero();
        Self {
            accumulators,
            learning_rate,
            epsilon,
        }
    }

    pub fn step(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let grads = grads.named_tensors();
        let mut params = params.tensors_mut();
        let mut acc = self.accumulators.tensors_mut();
        if grads.len() != params.len() || acc.len() != params.len() {
            return Err(Error::shape("adagrad tensor count", &[params.len()], &[grads.len()]));
        }
        for ((p, a), (_, g)) in params.iter_mut().zip(acc.iter_mut()).zip(grads) {
            adagrad_update(a, p, g, self.learning_rate, self.epsilon)?;
        }
        Ok(())
    }
}

/// `acc += g^2; theta -= lr * g / (sqrt(acc) + eps)`, elementwise. Entries
/// with `g == 0` are left untouched.
pub fn adagrad_update(acc: &mut Tensor, param: &mut Tensor, grad: &Tensor, lr: f64, eps: f64) -> Result<()> {
    if param.shape() != grad.shape() || acc.shape() != param.shape() {
        return Err(Error::shape("adagrad", param.shape(), grad.shape()));
    }
    for ((a, p), &g) in acc.data_mut().iter_mut().zip(param.data_mut()).zip(grad.data()) {
        if g == 0.0 {
            continue;
        }
        *a += g * g;
        *p -= lr * g / (a.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed_steps() {
        let mut acc = Tensor::zeros(&[1]);
        let mut p = Tensor::zeros(&[1]);
        adagrad_update(&mut acc, &mut p, &Tensor::from_vec(vec![2.0]), 0.1, 0.0).unwrap();
        assert!((p.data()[0] + 0.1).abs() < 1e-15);

        let mut acc = Tensor::zeros(&[1]);
        let mut p = Tensor::zeros(&[1]);
        let g = Tensor::from_vec(vec![1.0]);
        adagrad_update(&mut acc, &mut p, &g, 0.1, 0.0).unwrap();
        let first = -p.data()[0];
        adagrad_update(&mut acc, &mut p, &g, 0.1, 0.0).unwrap();
        let second = -p.data()[0] - first;
        assert!((first - 0.1).abs() < 1e-15);
        assert!((second - 0.1 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_and_shape_mismatch() {
        let mut opt = Adagrad::new(&Tensor::zeros(&[3]), 0.5, 1e-10);
        let mut p = Tensor::from_vec(vec![1.0, 2.0, 3.0]);
        opt.step(&mut p, &Tensor::zeros(&[3])).unwrap();
        assert_eq!(p.data(), &[1.0, 2.0, 3.0]);
        assert!(opt.step(&mut p, &Tensor::zeros(&[2])).is_err());
    }

    proptest! {
        #[test]
        fn accumulators_never_decrease(gs in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 4), 1..10)) {
            let mut p = Tensor::zeros(&[4]);
            let mut opt = Adagrad::new(&p, 0.01, 1e-10);
            let mut prev = opt.accumulators.data().to_vec();
            for g in gs {
                opt.step(&mut p, &Tensor::from_vec(g)).unwrap();
                let now = opt.accumulators.data().to_vec();
                for (a, b) in prev.iter().zip(&now) {
                    prop_assert!(b >= a && *b >= 0.0);
                }
                prev = now;
            }
        }
    }
}
