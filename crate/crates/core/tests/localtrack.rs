use langtrack_core::frame::{crop_resize, Frame, Modality};
use langtrack_core::localtrack::LocalTracker;
use langtrack_core::BoundingBox;
use proptest::prelude::*;

fn hash(x: usize, y: usize, salt: u64) -> f64 {
    let k = (x as u64 * 73_856_093) ^ (y as u64 * 19_349_663) ^ salt;
    (k.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 56) as f64 / 255.0
}

/// Textured square target at `(tx, ty)` on a textured background.
fn scene(w: usize, h: usize, tx: usize, ty: usize, side: usize) -> Frame {
    let mut f = Frame::new(w, h, Modality::Rgb).unwrap();
    for y in 0..h {
        for x in 0..w {
            let b = 0.2 + 0.2 * hash(x, y, 1);
            f.set_pixel(x, y, [b, b, b]);
        }
    }
    for y in 0..side {
        for x in 0..side {
            let v = hash(x, y, 7);
            f.set_pixel(tx + x, ty + y, [0.5 + 0.5 * v, 0.3 * v, 0.2]);
        }
    }
    f
}

fn zncc(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    if da / n < 1e-12 || db / n < 1e-12 {
        return f64::NEG_INFINITY;
    }
    num / (da * db).sqrt()
}

/// Brute-force argmax over the scale-1 offset grid via explicit crops.
fn brute_force_peak(frame: &Frame, template: &[f64], b: &BoundingBox) -> (i64, i64) {
    let step = 2.0 * b.w / 32.0;
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for oy in -11i64..=11 {
        for ox in -11i64..=11 {
            let cand = b.translate(ox as f64 * step, oy as f64 * step * b.h / b.w);
            let r = zncc(template, &crop_resize(frame, &cand, 32, 32).data);
            if r > best.0 {
                best = (r, (ox, oy));
            }
        }
    }
    best.1
}

#[test]
fn one_grid_step_translation_moves_the_peak() {
    let b = BoundingBox::new(48.0, 48.0, 32.0, 32.0);
    let f0 = scene(128, 128, 48, 48, 32);
    let t = LocalTracker::init(&f0, b).unwrap();
    let f1 = scene(128, 128, 50, 48, 32);
    let res = t.search(&f1, &b);
    assert_eq!(res.scale, 1.0);
    assert_eq!(res.offset, (1, 0));
    assert_eq!(res.bbox, BoundingBox::new(50.0, 48.0, 32.0, 32.0));
    assert_eq!(brute_force_peak(&f1, &t.template().data, &b), (1, 0));
    let peak = res.response_map.iter().copied().fold(f64::MIN, f64::max);
    assert_eq!(res.response_map[11 * 23 + 12], peak);
}

#[test]
fn full_occlusion_drops_confidence() {
    let b = BoundingBox::new(48.0, 48.0, 24.0, 24.0);
    let f0 = scene(128, 128, 48, 48, 24);
    let mut t = LocalTracker::init(&f0, b).unwrap();
    let mut f1 = f0.clone();
    for y in 40..80 {
        for x in 40..80 {
            f1.set_pixel(x, y, [0.1, 0.6, 0.9]);
        }
    }
    let obs = t.track(&f1);
    assert!(obs.confidence < 0.5, "confidence {}", obs.confidence);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shifts_within_window_are_followed(kx in -5i64..=5, ky in -5i64..=5) {
        let b = BoundingBox::new(48.0, 48.0, 32.0, 32.0);
        let f0 = scene(128, 128, 48, 48, 32);
        let t = LocalTracker::init(&f0, b).unwrap();
        let f1 = scene(128, 128, (48 + 2 * kx) as usize, (48 + 2 * ky) as usize, 32);
        let res = t.search(&f1, &b);
        prop_assert_eq!(res.offset, (kx, ky));
        prop_assert!(res.response_map.iter().all(|v| (0.0..=1.0).contains(v)));
        let peak = res.response_map.iter().copied().fold(f64::MIN, f64::max);
        prop_assert_eq!(peak, res.confidence);
    }

    #[test]
    fn track_is_deterministic(x in 10.0..80.0f64, y in 10.0..80.0f64, s in 12.0..30.0f64) {
        let f = scene(128, 128, 50, 40, 30);
        let b = BoundingBox::new(x, y, s, s * 0.8);
        let mut a = LocalTracker::init(&f, b).unwrap();
        let mut c = a.clone();
        let g = scene(128, 128, 53, 44, 30);
        let oa = a.track(&g);
        let oc = c.track(&g);
        prop_assert_eq!(oa, oc);
    }
}
