//! Scene samplers for the grounding corpus, the switch corpus and the
//! evaluation suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::describe::{matching_objects, side_of, Side};
use super::render::{generate, object_state};
use super::{ChallengeEvent, Color, EventParams, Keyframe, SceneSpec, ShapeKind, ShapeSpec, Trajectory};
use crate::error::Result;
use crate::frame::Frame;
use crate::geometry::BoundingBox;
use crate::types::{Attribute, LanguageSentence};

pub const FRAME_SIZE: (usize, usize) = (128, 128);

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn random_shape(rng: &mut ChaCha8Rng, size: f64, x: f64, y: f64) -> ShapeSpec {
    ShapeSpec {
        kind: ShapeKind::ALL[rng.gen_range(0..3)],
        color: Color::ALL[rng.gen_range(0..6)],
        size,
        aspect: rng.gen_range(0.85..1.2),
        trajectory: Trajectory::fixed(x, y),
        texture: rng.gen(),
    }
}

/// One grounding example: a single-frame scene, its sentence and the
/// target box.
#[derive(Clone, Debug)]
pub struct GroundingCase {
    pub spec: SceneSpec,
    pub frame: Frame,
    pub sentence: LanguageSentence,
    pub gt: BoundingBox,
    /// Two identical objects told apart only by the side word.
    pub spatial: bool,
}

fn finish_case(spec: SceneSpec, spatial: bool) -> Result<GroundingCase> {
    let rec = generate(&spec)?;
    Ok(GroundingCase {
        frame: rec.frames[0].clone(),
        sentence: rec.sentence,
        gt: rec.gt[0],
        spec,
        spatial,
    })
}

/// Either a lone object or an identical pair (equal odds).
pub fn grounding_case(seed: u64) -> Result<GroundingCase> {
    let mut rng = rng_for(seed, 0x67);
    if rng.gen_bool(0.5) {
        return identical_pair_case(rng.gen());
    }
    let (w, h) = (FRAME_SIZE.0 as f64, FRAME_SIZE.1 as f64);
    let size = rng.gen_range(14.0..32.0);
    let m = size * 0.7;
    let mut shape = random_shape(&mut rng, size, 0.0, 0.0);
    shape.trajectory = Trajectory::fixed(rng.gen_range(m..w - m), rng.gen_range(m..h - m));
    finish_case(SceneSpec::still(rng.gen(), FRAME_SIZE, 1, shape), false)
}

/// `n` cases drawn from a stream keyed by `seed`; distinct seeds give
/// disjoint splits.
pub fn grounding_cases(seed: u64, n: usize) -> Result<Vec<GroundingCase>> {
    let base = rng_for(seed, 0x6C).gen::<u64>();
    (0..n as u64).map(|i| grounding_case(base.wrapping_add(i))).collect()
}

/// Two identical objects on opposite sides of a frame midline; the target's
/// side word is the only disambiguating clause.
pub fn identical_pair_case(seed: u64) -> Result<GroundingCase> {
    let mut rng = rng_for(seed, 0x91);
    let (w, h) = (FRAME_SIZE.0 as f64, FRAME_SIZE.1 as f64);
    loop {
        let size = rng.gen_range(14.0..26.0);
        let horizontal = rng.gen_bool(0.5);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let mut place = |sign: f64| {
            let along = sign * rng.gen_range(22.0..46.0);
            let across = rng.gen_range(-0.6..0.6) * along.abs();
            if horizontal {
                (w / 2.0 + along, h / 2.0 + across)
            } else {
                (w / 2.0 + across, h / 2.0 + along)
            }
        };
        let (tx, ty) = place(sign);
        let (dx, dy) = place(-sign);
        let mut target = random_shape(&mut rng, size, tx, ty);
        target.aspect = 1.0;
        let mut twin = target.clone();
        twin.trajectory = Trajectory::fixed(dx, dy);
        let spec = SceneSpec {
            seed: rng.gen(),
            frame_size: FRAME_SIZE,
            length: 1,
            target,
            distractors: vec![twin],
            events: Vec::new(),
        };
        let side = side_of(tx, ty, w, h);
        let axis_ok = matches!(
            (horizontal, side),
            (true, Some(Side::Left | Side::Right)) | (false, Some(Side::Top | Side::Bottom))
        );
        let case = finish_case(spec, true)?;
        if axis_ok && matching_objects(&case.spec, &case.sentence)? == vec![0] {
            return Ok(case);
        }
    }
}

/// Random smooth waypoint path with at most `speed` pixels per frame.
fn wander(rng: &mut ChaCha8Rng, length: usize, size: f64, speed: f64) -> Trajectory {
    let (w, h) = (FRAME_SIZE.0 as f64, FRAME_SIZE.1 as f64);
    let m = size * 0.8 + 4.0;
    let mut x = rng.gen_range(m..w - m);
    let mut y = rng.gen_range(m..h - m);
    let mut keys = vec![Keyframe { frame: 0, x, y }];
    let mut t = 0;
    while t < length {
        let span = rng.gen_range(12..24);
        let reach = speed * span as f64;
        x = (x + rng.gen_range(-reach..reach)).clamp(m, w - m);
        y = (y + rng.gen_range(-reach..reach)).clamp(m, h - m);
        t += span;
        keys.push(Keyframe { frame: t, x, y });
    }
    Trajectory { keys }
}

fn sample_range(rng: &mut ChaCha8Rng, length: usize, min_len: usize, max_len: usize) -> (usize, usize) {
    let len = rng.gen_range(min_len..=max_len).min(length.saturating_sub(12));
    let start = rng.gen_range(8..length.saturating_sub(len + 2).max(9));
    (start, start + len)
}

fn occluder_color(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [0, 1, 2].map(|_| rng.gen_range(0.05..0.95))
}

/// Replaces the target path with one that leaves the frame and returns
/// along the outside, keeping per-frame motion small.
fn out_of_view(rng: &mut ChaCha8Rng, spec: &mut SceneSpec) -> (usize, usize) {
    let (w, h) = (FRAME_SIZE.0 as f64, FRAME_SIZE.1 as f64);
    let size = spec.target.size;
    let len = spec.length;
    let exit_start = rng.gen_range(10..len / 3);
    let (x0, y0) = spec.target.trajectory.position(exit_start);
    let out = size * 0.8 + 4.0;
    let right = rng.gen_bool(0.5);
    let ex = if right { w + out } else { -out };
    let travel = ((ex - x0).abs() / 2.0).ceil() as usize + 1;
    let exit_done = exit_start + travel;
    let hide = rng.gen_range(6..14);
    let dy = rng.gen_range(-30.0..30.0);
    let ry = (y0 + dy).clamp(size, h - size);
    let back = exit_done + hide;
    let rx = if right { w - out - 12.0 } else { out + 12.0 };
    let enter_done = back + (((ex - rx).abs() / 2.0).ceil() as usize).max(1);
    let mut keys: Vec<Keyframe> = spec
        .target
        .trajectory
        .keys
        .iter()
        .copied()
        .filter(|k| k.frame < exit_start)
        .collect();
    keys.push(Keyframe { frame: exit_start, x: x0, y: y0 });
    keys.push(Keyframe { frame: exit_done, x: ex, y: y0 });
    keys.push(Keyframe { frame: back, x: ex, y: ry });
    keys.push(Keyframe { frame: enter_done, x: rx, y: ry });
    spec.target.trajectory = Trajectory { keys };
    let start = exit_start + travel / 2;
    (start.min(len - 1), back.min(len - 1))
}

/// Adds a distractor identical to the target that crosses its path around
/// the middle of the returned range.
fn crossing(rng: &mut ChaCha8Rng, spec: &mut SceneSpec) -> (usize, usize) {
    let len = spec.length;
    let mid = rng.gen_range(len / 4..3 * len / 4);
    let (cx, cy) = object_state(spec, &spec.target, true, mid).bbox().center();
    let speed = rng.gen_range(1.6..2.4);
    let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (vx, vy) = (ang.cos() * speed, ang.sin() * speed);
    let half = rng.gen_range(14..24);
    let mut twin = spec.target.clone();
    twin.trajectory = Trajectory {
        keys: vec![
            Keyframe {
                frame: mid - half.min(mid),
                x: cx - vx * half.min(mid) as f64,
                y: cy - vy * half.min(mid) as f64,
            },
            Keyframe { frame: mid, x: cx, y: cy },
            Keyframe {
                frame: mid + half,
                x: cx + vx * half as f64,
                y: cy + vy * half as f64,
            },
        ],
    };
    spec.distractors.push(twin);
    let d = spec.distractors.len() - 1;
    let range = (mid.saturating_sub(4), (mid + 4).min(len - 1));
    spec.events
        .push(ChallengeEvent::new(Attribute::TC, range.0, range.1, EventParams::Crossing { distractor: d }));
    range
}

fn add_event(rng: &mut ChaCha8Rng, spec: &mut SceneSpec, attr: Attribute) {
    let len = spec.length;
    let (s, e) = sample_range(rng, len, 10, 20);
    let params = match attr {
        Attribute::FOC => EventParams::Occluder {
            color: occluder_color(rng),
            margin: 3.0,
            fraction: 1.0,
        },
        Attribute::POC => EventParams::Occluder {
            color: occluder_color(rng),
            margin: 2.0,
            fraction: rng.gen_range(0.4..0.6),
        },
        Attribute::AS => EventParams::Noise {
            amplitude: rng.gen_range(0.25..0.45),
        },
        Attribute::IV => EventParams::Gain {
            factor: if rng.gen_bool(0.5) { rng.gen_range(0.4..0.6) } else { rng.gen_range(1.5..1.8) },
        },
        Attribute::SV => EventParams::Scale {
            factor: if rng.gen_bool(0.5) { rng.gen_range(0.6..0.75) } else { rng.gen_range(1.3..1.6) },
        },
        Attribute::ROT => EventParams::Rotation {
            degrees: rng.gen_range(60.0..180.0),
        },
        Attribute::DEF => EventParams::Deform {
            amplitude: rng.gen_range(0.15..0.3),
            period: rng.gen_range(8.0..16.0),
        },
        Attribute::CM => EventParams::Shift {
            dx: rng.gen_range(-18.0..18.0),
            dy: rng.gen_range(-18.0..18.0),
        },
        Attribute::MB => EventParams::Blur {
            radius: rng.gen_range(2..4),
        },
        Attribute::LR => EventParams::Pixelate {
            block: rng.gen_range(3..5),
        },
        Attribute::ARC => EventParams::Aspect {
            factor: rng.gen_range(2.3..2.8),
        },
        Attribute::VC => {
            let mut c = Color::ALL[rng.gen_range(0..6)];
            while c == spec.target.color {
                c = Color::ALL[rng.gen_range(0..6)];
            }
            EventParams::ColorSwap { color: c }
        }
        Attribute::BC => EventParams::Clutter {
            count: rng.gen_range(15..30),
            seed: rng.gen(),
        },
        Attribute::MS => EventParams::None,
        Attribute::OV => {
            let (s, e) = out_of_view(rng, spec);
            spec.events.push(ChallengeEvent::new(Attribute::OV, s, e, EventParams::None));
            return;
        }
        Attribute::TC => {
            crossing(rng, spec);
            return;
        }
        Attribute::FM => {
            let j = rng.gen_range(len / 4..3 * len / 4);
            let keys = &mut spec.target.trajectory.keys;
            let (x, y) = Trajectory { keys: keys.clone() }.position(j);
            let jump = spec.target.size * rng.gen_range(1.3..1.7);
            let (fw, fh) = (FRAME_SIZE.0 as f64, FRAME_SIZE.1 as f64);
            let nx = if x + jump < fw - spec.target.size { x + jump } else { x - jump };
            keys.retain(|k| k.frame < j);
            keys.push(Keyframe { frame: j, x, y });
            keys.push(Keyframe { frame: j + 1, x: nx, y: y.clamp(0.0, fh) });
            return;
        }
    };
    spec.events.push(ChallengeEvent::new(attr, s, e, params));
}

/// A tracking scene featuring `primary` and any `extra` attributes.
/// Shortest length [`switch_scene`] and [`occlusion_suite`] accept.
pub const MIN_SCENE_LENGTH: usize = 40;

/// # Panics
/// If `length` is below [`MIN_SCENE_LENGTH`].
pub fn switch_scene(seed: u64, length: usize, primary: Attribute, extra: &[Attribute]) -> SceneSpec {
    assert!(length >= MIN_SCENE_LENGTH, "scene length {length} below {MIN_SCENE_LENGTH}");
    let mut rng = rng_for(seed, 0x5C);
    let size = rng.gen_range(16.0..28.0);
    let mut target = random_shape(&mut rng, size, 0.0, 0.0);
    target.trajectory = wander(&mut rng, length, size, 1.2);
    let n_distractors = rng.gen_range(0..3);
    let mut distractors = Vec::new();
    for _ in 0..n_distractors {
        let ds = rng.gen_range(12.0..28.0);
        let mut d = random_shape(&mut rng, ds, 0.0, 0.0);
        while d.color == target.color && d.kind == target.kind {
            d.color = Color::ALL[rng.gen_range(0..6)];
        }
        d.trajectory = wander(&mut rng, length, ds, 1.2);
        distractors.push(d);
    }
    let mut spec = SceneSpec {
        seed: rng.gen(),
        frame_size: FRAME_SIZE,
        length,
        target,
        distractors,
        events: Vec::new(),
    };
    add_event(&mut rng, &mut spec, primary);
    for &a in extra {
        if a != primary && !spec.events.iter().any(|e| e.attribute == a) {
            add_event(&mut rng, &mut spec, a);
        }
    }
    spec
}

/// `n` scenes alternating full-occlusion and out-of-view events.
pub fn occlusion_suite(seed: u64, n: usize, length: usize) -> Vec<SceneSpec> {
    (0..n)
        .map(|i| {
            let attr = if i % 2 == 0 { Attribute::FOC } else { Attribute::OV };
            let mut spec = switch_scene(seed ^ (i as u64), length, attr, &[]);
            if attr == Attribute::FOC {
                let mut rng = rng_for(seed ^ (i as u64), 0xF0C);
                let (s, e) = sample_range(&mut rng, length, 14, 22);
                if let Some(ev) = spec.events.iter_mut().find(|e| e.attribute == Attribute::FOC) {
                    ev.start = s;
                    ev.end = e;
                }
            }
            spec
        })
        .collect()
}

/// A target crossed by an identical twin, which the local tracker tends
/// to follow afterwards. Returns the scene and the crossing frame range.
pub fn distractor_window_scene(seed: u64, length: usize) -> (SceneSpec, (usize, usize)) {
    let mut rng = rng_for(seed, 0xD1);
    let size = rng.gen_range(16.0..24.0);
    let mut target = random_shape(&mut rng, size, 0.0, 0.0);
    target.trajectory = wander(&mut rng, length, size, 1.0);
    let mut spec = SceneSpec {
        seed: rng.gen(),
        frame_size: FRAME_SIZE,
        length,
        target,
        distractors: Vec::new(),
        events: Vec::new(),
    };
    let range = crossing(&mut rng, &mut spec);
    (spec, range)
}
