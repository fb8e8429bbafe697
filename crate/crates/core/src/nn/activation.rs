/// Probabilities are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` before the log.
pub const BCE_CLAMP: f64 = 1e-7;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gradient through `y = sigmoid(x)` given the output `y`.
#[inline]
pub fn sigmoid_backward(y: f64, dy: f64) -> f64 {
    dy * y * (1.0 - y)
}

/// Gradient through `y = tanh(x)` given the output `y`.
#[inline]
pub fn tanh_backward(y: f64, dy: f64) -> f64 {
    dy * (1.0 - y * y)
}

/// Numerically stable softmax.
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Gradient through `y = softmax(x)`: `dx_i = y_i (dy_i - sum_j y_j dy_j)`.
pub fn softmax_backward(y: &[f64], dy: &[f64]) -> Vec<f64> {
    let s: f64 = y.iter().zip(dy).map(|(a, b)| a * b).sum();
    y.iter().zip(dy).map(|(yi, di)| yi * (di - s)).collect()
}

/// Binary cross-entropy `-[y ln p + (1 - y) ln(1 - p)]` with clamping.
pub fn bce(p: f64, label: f64) -> f64 {
    let pc = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    -(label * pc.ln() + (1.0 - label) * (1.0 - pc).ln())
}

/// `d bce / d p`; zero where the clamp is active.
pub fn bce_backward(p: f64, label: f64) -> f64 {
    if !(BCE_CLAMP..=1.0 - BCE_CLAMP).contains(&p) {
        return 0.0;
    }
    -label / p + (1.0 - label) / (1.0 - p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((bce(0.5, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(softmax(&[2.0; 4]), vec![0.25; 4]);
        assert!(bce(0.0, 1.0).is_finite());
    }

    #[test]
    fn finite_difference_scalars() {
        let h = 1e-5;
        for &x in &[-3.0, -0.2, 0.0, 0.7, 4.0] {
            let num = (sigmoid(x + h) - sigmoid(x - h)) / (2.0 * h);
            assert!((sigmoid_backward(sigmoid(x), 1.0) - num).abs() < 1e-9);
            let num = ((x + h).tanh() - (x - h).tanh()) / (2.0 * h);
            assert!((tanh_backward(x.tanh(), 1.0) - num).abs() < 1e-9);
        }
        for &p in &[0.1, 0.5, 0.93] {
            for &y in &[0.0, 1.0] {
                let num = (bce(p + h, y) - bce(p - h, y)) / (2.0 * h);
                assert!((bce_backward(p, y) - num).abs() / num.abs().max(1.0) < 1e-7);
            }
        }
    }

    #[test]
    fn softmax_backward_matches_fd() {
        let x = [0.3, -1.2, 2.0, 0.1];
        let w = [0.5, -0.7, 1.1, 0.2];
        let f = |x: &[f64]| softmax(x).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let g = softmax_backward(&softmax(&x), &w);
        for i in 0..4 {
            let mut xp = x;
            xp[i] += 1e-5;
            let mut xm = x;
            xm[i] -= 1e-5;
            let num = (f(&xp) - f(&xm)) / 2e-5;
            assert!((g[i] - num).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one_and_is_equivariant(v in prop::collection::vec(-30.0..30.0f64, 1..12), rot in 0usize..12) {
            let s = softmax(&v);
            prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let k = rot % v.len();
            let mut r = v.clone();
            r.rotate_left(k);
            let mut sr = s.clone();
            sr.rotate_left(k);
            let s2 = softmax(&r);
            for (a, b) in s2.iter().zip(&sr) {
                prop_assert!((a - b).abs() < 1e-15);
            }
        }
    }
}
