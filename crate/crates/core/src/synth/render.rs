use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{describe, luma, ChallengeEvent, Color, EventParams, SceneSpec, ShapeKind, ShapeSpec};
use crate::error::Result;
use crate::frame::{quantize, Frame, Modality};
use crate::geometry::BoundingBox;
use crate::types::{Attribute, SequenceRecord};

/// Pose and appearance of one object at one frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectState {
    pub kind: ShapeKind,
    pub color: Color,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub angle: f64,
    pub texture: u64,
}

impl ObjectState {
    pub fn bbox(&self) -> BoundingBox {
        BoundingBox::from_center(self.cx, self.cy, self.w, self.h)
    }

    /// Whether the pixel center `(px, py)` lies inside the shape.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let u = (px - self.cx) / (self.w / 2.0);
        let v = (py - self.cy) / (self.h / 2.0);
        match self.kind {
            ShapeKind::Square => u.abs() <= 1.0 && v.abs() <= 1.0,
            ShapeKind::Circle => u * u + v * v <= 1.0,
            ShapeKind::Triangle => (-1.0..=1.0).contains(&v) && u.abs() <= (v + 1.0) / 2.0,
        }
    }

    /// Textured surface colour at `(px, py)`.
    pub fn shade(&self, px: f64, py: f64) -> [f64; 3] {
        let u = (px - self.cx) / (self.w / 2.0);
        let v = (py - self.cy) / (self.h / 2.0);
        let (s, c) = self.angle.sin_cos();
        let (ru, rv) = (c * u - s * v, s * u + c * v);
        let h = splitmix(self.texture);
        let f1 = 3.0 + (h & 0xff) as f64 / 64.0;
        let f2 = 3.0 + ((h >> 8) & 0xff) as f64 / 64.0;
        let p1 = ((h >> 16) & 0xffff) as f64 / 65536.0 * 2.0 * PI;
        let p2 = ((h >> 32) & 0xffff) as f64 / 65536.0 * 2.0 * PI;
        let pattern = 0.5 * (f1 * ru + p1).sin() + 0.5 * (f2 * rv + p2).sin();
        let base = self.color.rgb();
        [0, 1, 2].map(|i| (base[i] + 0.14 * pattern).clamp(0.0, 1.0))
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn hash_unit(x: i64, y: i64, salt: u64) -> f64 {
    let k = splitmix((x as u64).wrapping_mul(0x1000_0000_01B3) ^ (y as u64).wrapping_mul(0x0100_0193) ^ salt);
    (k >> 11) as f64 / (1u64 << 53) as f64
}

fn camera_offset(spec: &SceneSpec, t: usize) -> (f64, f64) {
    let mut off = (0.0, 0.0);
    for e in &spec.events {
        if let EventParams::Shift { dx, dy } = e.params {
            let p = e.progress(t);
            off.0 += dx * p;
            off.1 += dy * p;
        }
    }
    off
}

/// State of `shape` at frame `t`; target-only events apply when `is_target`.
pub fn object_state(spec: &SceneSpec, shape: &ShapeSpec, is_target: bool, t: usize) -> ObjectState {
    let (x, y) = shape.trajectory.position(t);
    let (ox, oy) = camera_offset(spec, t);
    let mut st = ObjectState {
        kind: shape.kind,
        color: shape.color,
        cx: x + ox,
        cy: y + oy,
        w: shape.size,
        h: shape.size * shape.aspect,
        angle: 0.0,
        texture: shape.texture,
    };
    if !is_target {
        return st;
    }
    for e in &spec.events {
        let p = e.progress(t);
        match e.params {
            EventParams::Scale { factor } => {
                let k = 1.0 + (factor - 1.0) * p;
                st.w *= k;
                st.h *= k;
            }
            EventParams::Aspect { factor } => st.h *= 1.0 + (factor - 1.0) * p,
            EventParams::Rotation { degrees } => st.angle += degrees.to_radians() * p,
            EventParams::Deform { amplitude, period } if e.active(t) => {
                let k = amplitude * (2.0 * PI * (t - e.start) as f64 / period).sin();
                st.w *= 1.0 + k;
                st.h /= 1.0 + k;
            }
            EventParams::ColorSwap { color } if e.active(t) => st.color = color,
            _ => {}
        }
    }
    st
}

/// Image-space rectangle of an occlusion event (before the width fraction).
fn occluder_rect(spec: &SceneSpec, e: &ChallengeEvent, margin: f64, fraction: f64) -> BoundingBox {
    let mut x1 = f64::INFINITY;
    let mut y1 = f64::INFINITY;
    let mut x2 = f64::NEG_INFINITY;
    let mut y2 = f64::NEG_INFINITY;
    for t in e.start..=e.end {
        let b = object_state(spec, &spec.target, true, t).bbox();
        x1 = x1.min(b.x1);
        y1 = y1.min(b.y1);
        x2 = x2.max(b.x2());
        y2 = y2.max(b.y2());
    }
    let (x1, y1, x2, y2) = (x1 - margin, y1 - margin, x2 + margin, y2 + margin);
    BoundingBox::new(x1, y1, (x2 - x1) * fraction, y2 - y1)
}

struct Canvas {
    w: usize,
    h: usize,
    px: Vec<[f64; 3]>,
}

impl Canvas {
    fn fill_shape(&mut self, s: &ObjectState) {
        let b = s.bbox();
        let x0 = b.x1.floor().max(0.0) as usize;
        let y0 = b.y1.floor().max(0.0) as usize;
        let x1 = (b.x2().ceil().max(0.0) as usize).min(self.w);
        let y1 = (b.y2().ceil().max(0.0) as usize).min(self.h);
        for y in y0..y1 {
            for x in x0..x1 {
                let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
                if s.contains(fx, fy) {
                    self.px[y * self.w + x] = s.shade(fx, fy);
                }
            }
        }
    }

    fn fill_rect(&mut self, b: &BoundingBox, rgb: [f64; 3]) {
        for y in 0..self.h {
            for x in 0..self.w {
                let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
                if fx >= b.x1 && fx < b.x2() && fy >= b.y1 && fy < b.y2() {
                    self.px[y * self.w + x] = rgb;
                }
            }
        }
    }
}

struct Background {
    c0: [f64; 3],
    c1: [f64; 3],
    dir: (f64, f64),
    salt: u64,
}

impl Background {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ 0xB6));
        let mut col = || [0, 1, 2].map(|_| rng.gen_range(0.3..0.6));
        let (c0, c1) = (col(), col());
        let a: f64 = rng.gen_range(0.0..2.0 * PI);
        Self {
            c0,
            c1,
            dir: (a.cos(), a.sin()),
            salt: rng.gen(),
        }
    }

    fn at(&self, wx: f64, wy: f64, size: (usize, usize)) -> [f64; 3] {
        let diag = ((size.0 * size.0 + size.1 * size.1) as f64).sqrt();
        let g = (((wx * self.dir.0 + wy * self.dir.1) / diag) + 1.0) / 2.0;
        let g = g.clamp(0.0, 1.0);
        let n = 0.08 * (hash_unit(wx.floor() as i64, wy.floor() as i64, self.salt) - 0.5);
        [0, 1, 2].map(|i| (self.c0[i] + g * (self.c1[i] - self.c0[i]) + n).clamp(0.0, 1.0))
    }
}

fn clutter(spec: &SceneSpec, count: usize, seed: u64) -> Vec<ObjectState> {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed));
    let (w, h) = spec.frame_size;
    (0..count)
        .map(|_| {
            let s = rng.gen_range(4.0..10.0);
            ObjectState {
                kind: ShapeKind::ALL[rng.gen_range(0..3)],
                color: Color::ALL[rng.gen_range(0..6)],
                cx: rng.gen_range(0.0..w as f64),
                cy: rng.gen_range(0.0..h as f64),
                w: s,
                h: s,
                angle: 0.0,
                texture: rng.gen(),
            }
        })
        .collect()
}

fn render_frame(spec: &SceneSpec, bg: &Background, t: usize) -> Frame {
    let (w, h) = spec.frame_size;
    let (ox, oy) = camera_offset(spec, t);
    let mut canvas = Canvas {
        w,
        h,
        px: Vec::with_capacity(w * h),
    };
    for y in 0..h {
        for x in 0..w {
            canvas.px.push(bg.at(x as f64 + 0.5 - ox, y as f64 + 0.5 - oy, (w, h)));
        }
    }
    for e in spec.events.iter().filter(|e| e.active(t)) {
        if let EventParams::Clutter { count, seed } = e.params {
            for mut blob in clutter(spec, count, seed) {
                blob.cx += ox;
                blob.cy += oy;
                canvas.fill_shape(&blob);
            }
        }
    }
    let target = object_state(spec, &spec.target, true, t);
    canvas.fill_shape(&target);
    for d in &spec.distractors {
        canvas.fill_shape(&object_state(spec, d, false, t));
    }
    for e in spec.events.iter().filter(|e| e.active(t)) {
        if let EventParams::Occluder { color, margin, fraction } = e.params {
            canvas.fill_rect(&occluder_rect(spec, e, margin, fraction), color);
        }
    }
    for e in spec.events.iter().filter(|e| e.active(t)) {
        if let EventParams::Noise { amplitude } = e.params {
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix(spec.seed ^ splitmix(t as u64 ^ 0xA5)));
            let b = target.bbox().clip(w as f64, h as f64);
            let (x0, y0) = (b.x1.floor() as usize, b.y1.floor() as usize);
            let (x1, y1) = ((b.x2().ceil() as usize).min(w), (b.y2().ceil() as usize).min(h));
            for y in y0..y1 {
                for x in x0..x1 {
                    let p = &mut canvas.px[y * w + x];
                    for c in p.iter_mut() {
                        *c = (*c + rng.gen_range(-amplitude..=amplitude)).clamp(0.0, 1.0);
                    }
                }
            }
        }
    }
    let mut thermal = false;
    for e in spec.events.iter().filter(|e| e.active(t)) {
        match e.params {
            EventParams::Gain { factor } => {
                let k = 1.0 + (factor - 1.0) * e.progress(t);
                for p in canvas.px.iter_mut() {
                    *p = p.map(|v| (v * k).clamp(0.0, 1.0));
                }
            }
            EventParams::Blur { radius } => {
                let src = canvas.px.clone();
                for y in 0..h {
                    for x in 0..w {
                        let lo = x.saturating_sub(radius);
                        let hi = (x + radius).min(w - 1);
                        let mut acc = [0.0; 3];
                        for xx in lo..=hi {
                            for c in 0..3 {
                                acc[c] += src[y * w + xx][c];
                            }
                        }
                        let n = (hi - lo + 1) as f64;
                        canvas.px[y * w + x] = acc.map(|v| v / n);
                    }
                }
            }
            EventParams::Pixelate { block } if block > 1 => {
                for by in (0..h).step_by(block) {
                    for bx in (0..w).step_by(block) {
                        let (ey, ex) = ((by + block).min(h), (bx + block).min(w));
                        let mut acc = [0.0; 3];
                        for y in by..ey {
                            for x in bx..ex {
                                for c in 0..3 {
                                    acc[c] += canvas.px[y * w + x][c];
                                }
                            }
                        }
                        let n = ((ey - by) * (ex - bx)) as f64;
                        let mean = acc.map(|v| v / n);
                        for y in by..ey {
                            for x in bx..ex {
                                canvas.px[y * w + x] = mean;
                            }
                        }
                    }
                }
            }
            _ => {}
        }
        if e.attribute == Attribute::MS {
            thermal = true;
        }
    }
    let modality = if thermal { Modality::Thermal } else { Modality::Rgb };
    let mut data = Vec::with_capacity(w * h * 3);
    for p in &canvas.px {
        if thermal {
            let g = quantize(luma(*p));
            data.extend([g, g, g]);
        } else {
            data.extend(p.map(quantize));
        }
    }
    Frame::from_raw(w, h, data, modality).expect("canvas dimensions are consistent")
}

/// Renders a scene into an annotated sequence.
pub fn generate(spec: &SceneSpec) -> Result<SequenceRecord> {
    spec.validate()?;
    let bg = Background::new(spec.seed);
    let (fw, fh) = (spec.frame_size.0 as f64, spec.frame_size.1 as f64);
    let mut frames = Vec::with_capacity(spec.length);
    let mut gt = Vec::with_capacity(spec.length);
    let mut absent = Vec::with_capacity(spec.length);
    for t in 0..spec.length {
        frames.push(render_frame(spec, &bg, t));
        let b = object_state(spec, &spec.target, true, t).bbox();
        let mut hidden = false;
        for e in spec.events.iter().filter(|e| e.active(t)) {
            match (e.attribute, &e.params) {
                (Attribute::FOC, EventParams::Occluder { margin, fraction, .. }) => {
                    let occ = occluder_rect(spec, e, *margin, *fraction);
                    if b.area() > 0.0 && occ.intersection_area(&b) / b.area() >= 0.99 {
                        hidden = true;
                    }
                }
                (Attribute::OV, _) => {
                    if b.clip(fw, fh).is_empty() {
                        hidden = true;
                    }
                }
                _ => {}
            }
        }
        gt.push(b);
        absent.push(hidden);
    }
    let mut attributes: BTreeSet<Attribute> = spec.events.iter().map(|e| e.attribute).collect();
    if has_fast_motion(&gt) {
        attributes.insert(Attribute::FM);
    }
    Ok(SequenceRecord {
        name: format!("synth_{:016x}", spec.seed),
        frames,
        gt,
        absent,
        attributes,
        sentence: describe(spec),
    })
}

/// Some frame's center displacement exceeds the previous box's larger side.
pub(crate) fn has_fast_motion(gt: &[BoundingBox]) -> bool {
    gt.windows(2).any(|w| {
        let (a, b) = (w[0].center(), w[1].center());
        let d = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        d > w[0].w.max(w[0].h)
    })
}
