use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ParamSet;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Denominator floor for the relative error, so that entries whose true
/// gradient is zero are judged on absolute error.
const REL_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Location of the worst entry, e.g. `"0.w_hidden[17]"` or `"input[3]"`.
    pub worst: String,
    pub checked: usize,
    pub tolerance: f64,
    pub passed: bool,
}

fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares analytic gradients of a scalar `loss(params, inputs)` against
/// central differences over every parameter and input entry.
pub fn grad_check<P, F>(
    params: &P,
    param_grads: &P,
    inputs: &[f64],
    input_grads: &[f64],
    loss: F,
    tolerance: f64,
) -> GradCheckReport
where
    P: ParamSet + Clone,
    F: Fn(&P, &[f64]) -> f64,
{
    run(params, param_grads, inputs, input_grads, loss, tolerance, |n| (0..n).collect())
}

/// Like [`grad_check`] but probes at most `per_tensor` seeded entries of
/// each tensor (and of the inputs).
pub fn grad_check_sampled<P, F>(
    params: &P,
    param_grads: &P,
    inputs: &[f64],
    input_grads: &[f64],
    loss: F,
    tolerance: f64,
    per_tensor: usize,
    seed: u64,
) -> GradCheckReport
where
    P: ParamSet + Clone,
    F: Fn(&P, &[f64]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run(params, param_grads, inputs, input_grads, loss, tolerance, |n| {
        if n <= per_tensor {
            (0..n).collect()
        } else {
            let mut idx = sample(&mut rng, n, per_tensor).into_vec();
            idx.sort_unstable();
            idx
        }
    })
}

fn run<P, F, S>(
    params: &P,
    param_grads: &P,
    inputs: &[f64],
    input_grads: &[f64],
    loss: F,
    tolerance: f64,
    mut select: S,
) -> GradCheckReport
where
    P: ParamSet + Clone,
    F: Fn(&P, &[f64]) -> f64,
    S: FnMut(usize) -> Vec<usize>,
{
    let mut worst = (0.0f64, String::from("none"));
    let mut checked = 0;
    let mut note = |err: f64, at: String| {
        if err > worst.0 || err.is_nan() {
            worst = (if err.is_nan() { f64::INFINITY } else { err }, at);
        }
    };

    let names: Vec<String> = params.named_tensors().into_iter().map(|(n, _)| n).collect();
    let analytic: Vec<Vec<f64>> = param_grads
        .named_tensors()
        .into_iter()
        .map(|(_, t)| t.data().to_vec())
        .collect();
    let mut probe = params.clone();
    for (ti, name) in names.iter().enumerate() {
        let len = analytic[ti].len();
        for i in select(len) {
            let orig = probe.tensors_mut()[ti].data()[i];
            probe.tensors_mut()[ti].data_mut()[i] = orig + FD_STEP;
            let up = loss(&probe, inputs);
            probe.tensors_mut()[ti].data_mut()[i] = orig - FD_STEP;
            let down = loss(&probe, inputs);
            probe.tensors_mut()[ti].data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            note(rel_error(analytic[ti][i], numeric), format!("{name}[{i}]"));
            checked += 1;
        }
    }

    let mut x = inputs.to_vec();
    for i in select(inputs.len()) {
        let orig = x[i];
        x[i] = orig + FD_STEP;
        let up = loss(params, &x);
        x[i] = orig - FD_STEP;
        let down = loss(params, &x);
        x[i] = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        note(rel_error(input_grads[i], numeric), format!("input[{i}]"));
        checked += 1;
    }

    GradCheckReport {
        max_rel_error: worst.0,
        worst: worst.1,
        checked,
        tolerance,
        passed: worst.0 < tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::DenseLayer;
    use rand::Rng;

    fn dense_case(seed: u64) -> (DenseLayer, Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (i, o) = (rng.gen_range(1..6), rng.gen_range(1..6));
        let mut layer = DenseLayer::xavier(i, o, &mut rng);
        for b in layer.bias.data_mut() {
            *b = rng.gen_range(-1.0..1.0);
        }
        let x = (0..i).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = (0..o).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (layer, x, w)
    }

    fn dense_loss(w: &[f64]) -> impl Fn(&DenseLayer, &[f64]) -> f64 + '_ {
        move |l: &DenseLayer, x: &[f64]| {
            l.forward(x).unwrap().iter().zip(w).map(|(y, c)| y.tanh() * c).sum()
        }
    }

    fn dense_dy(layer: &DenseLayer, x: &[f64], w: &[f64]) -> Vec<f64> {
        let y = layer.forward(x).unwrap();
        y.iter().zip(w).map(|(y, c)| c * (1.0 - y.tanh().powi(2))).collect()
    }

    #[test]
    fn dense_passes_at_1e6_over_seeds() {
        for seed in 0..20 {
            let (layer, x, w) = dense_case(seed);
            let (dx, g) = layer.backward(&x, &dense_dy(&layer, &x, &w)).unwrap();
            let r = grad_check(&layer, &g, &x, &dx, dense_loss(&w), 1e-6);
            assert!(r.passed, "seed {seed}: {r:?}");
        }
    }

    #[test]
    fn random_3x2_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let layer = DenseLayer::xavier(2, 3, &mut rng);
        let x = vec![0.25, -0.8];
        let w = vec![1.0, -0.5, 0.3];
        let (dx, g) = layer.backward(&x, &dense_dy(&layer, &x, &w)).unwrap();
        assert!(grad_check(&layer, &g, &x, &dx, dense_loss(&w), 1e-6).passed);
    }

    #[test]
    fn corrupted_weight_gradient_is_detected() {
        let (layer, x, w) = dense_case(1);
        let (dx, mut g) = layer.backward(&x, &dense_dy(&layer, &x, &w)).unwrap();
        g.weight.scale(2.0);
        let r = grad_check(&layer, &g, &x, &dx, dense_loss(&w), 1e-6);
        assert!(!r.passed);
        assert!(r.worst.starts_with("weight"), "{}", r.worst);
    }

    #[test]
    fn sampled_check_probes_a_subset() {
        let (layer, x, w) = dense_case(2);
        let (dx, g) = layer.backward(&x, &dense_dy(&layer, &x, &w)).unwrap();
        let r = grad_check_sampled(&layer, &g, &x, &dx, dense_loss(&w), 1e-6, 1, 0);
        assert_eq!(r.checked, 3);
        assert!(r.passed);
    }
}
