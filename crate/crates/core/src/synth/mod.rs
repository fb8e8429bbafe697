//! Deterministic synthetic sequences: textured shapes moving over a
//! textured background, with challenge events, ground truth, absent labels
//! and template-grammar sentences.

mod corpus;
mod describe;
mod render;
mod scenes;

pub use corpus::{make_switch_corpus, run_local_tracker, CorpusEntry, CorpusManifest, CorpusOptions};
pub use describe::{describe, matching_objects, parse_clause, side_of, Clause, Relation, Side, VOCABULARY};
pub use render::{generate, object_state, ObjectState};
pub use scenes::{
    distractor_window_scene, grounding_case, grounding_cases, identical_pair_case, occlusion_suite, switch_scene,
    GroundingCase, MIN_SCENE_LENGTH,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Attribute;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Square,
    Circle,
    Triangle,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 3] = [ShapeKind::Square, ShapeKind::Circle, ShapeKind::Triangle];

    pub fn word(&self) -> &'static str {
        match self {
            ShapeKind::Square => "square",
            ShapeKind::Circle => "circle",
            ShapeKind::Triangle => "triangle",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Green,
    Blue,
    Yellow,
    White,
    Black,
}

impl Color {
    pub const ALL: [Color; 6] = [Color::Red, Color::Green, Color::Blue, Color::Yellow, Color::White, Color::Black];

    pub fn word(&self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Yellow => "yellow",
            Color::White => "white",
            Color::Black => "black",
        }
    }

    pub fn rgb(&self) -> [f64; 3] {
        match self {
            Color::Red => [0.88, 0.12, 0.10],
            Color::Green => [0.12, 0.75, 0.20],
            Color::Blue => [0.15, 0.25, 0.92],
            Color::Yellow => [0.95, 0.88, 0.12],
            Color::White => [0.93, 0.93, 0.93],
            Color::Black => [0.10, 0.10, 0.10],
        }
    }

    pub fn intensity(&self) -> f64 {
        luma(self.rgb())
    }
}

/// Grayscale transform used for thermal frames.
pub fn luma(rgb: [f64; 3]) -> f64 {
    0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]
}

/// The shape center is at `(x, y)` at frame `frame`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub frame: usize,
    pub x: f64,
    pub y: f64,
}

/// Piecewise-linear path through keyframes; the per-segment speed is the
/// segment length over its frame span. Holds the first (last) position
/// before (after) the keyframe range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub keys: Vec<Keyframe>,
}

impl Trajectory {
    pub fn fixed(x: f64, y: f64) -> Self {
        Self {
            keys: vec![Keyframe { frame: 0, x, y }],
        }
    }

    pub fn position(&self, t: usize) -> (f64, f64) {
        let keys = &self.keys;
        if t <= keys[0].frame {
            return (keys[0].x, keys[0].y);
        }
        for w in keys.windows(2) {
            let (a, b) = (w[0], w[1]);
            if t <= b.frame {
                let s = (t - a.frame) as f64 / (b.frame - a.frame) as f64;
                return (a.x + s * (b.x - a.x), a.y + s * (b.y - a.y));
            }
        }
        let last = keys[keys.len() - 1];
        (last.x, last.y)
    }

    fn validate(&self) -> Result<()> {
        if self.keys.is_empty() {
            return Err(Error::Invalid("trajectory needs at least one keyframe".into()));
        }
        if self.keys.windows(2).any(|w| w[1].frame <= w[0].frame) {
            return Err(Error::Invalid("keyframes must have strictly increasing frames".into()));
        }
        if self.keys.iter().any(|k| !k.x.is_finite() || !k.y.is_finite()) {
            return Err(Error::Invalid("non-finite keyframe".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub color: Color,
    /// Width in pixels.
    pub size: f64,
    /// Height over width.
    pub aspect: f64,
    pub trajectory: Trajectory,
    /// Seeds the surface pattern; equal seeds give identical appearance.
    pub texture: u64,
}

/// Attribute-specific event parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventParams {
    None,
    /// Rectangle covering the union of target boxes over the event range,
    /// grown by `margin`; `fraction` of its width is kept (from the left).
    Occluder { color: [f64; 3], margin: f64, fraction: f64 },
    /// Uniform noise of this amplitude inside the target box.
    Noise { amplitude: f64 },
    /// Whole-frame intensity gain reached at the end of the range.
    Gain { factor: f64 },
    /// Target size multiplier reached at the end of the range.
    Scale { factor: f64 },
    /// Surface-pattern rotation in degrees reached at the end of the range.
    Rotation { degrees: f64 },
    /// Oscillating stretch of the target (`w` up while `h` down).
    Deform { amplitude: f64, period: f64 },
    /// Camera displacement reached at the end of the range.
    Shift { dx: f64, dy: f64 },
    /// Horizontal box blur radius.
    Blur { radius: usize },
    /// Block size of the pixelation.
    Pixelate { block: usize },
    /// Target aspect multiplier reached at the end of the range.
    Aspect { factor: f64 },
    /// Target colour during the range.
    ColorSwap { color: Color },
    /// Static textured blobs over the background.
    Clutter { count: usize, seed: u64 },
    /// Index of the distractor that crosses the target.
    Crossing { distractor: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChallengeEvent {
    pub attribute: Attribute,
    pub start: usize,
    pub end: usize,
    pub params: EventParams,
}

impl ChallengeEvent {
    pub fn new(attribute: Attribute, start: usize, end: usize, params: EventParams) -> Self {
        Self {
            attribute,
            start,
            end,
            params,
        }
    }

    pub fn active(&self, t: usize) -> bool {
        (self.start..=self.end).contains(&t)
    }

    /// Linear ramp: 0 before the range, 1 after it.
    pub fn progress(&self, t: usize) -> f64 {
        if t <= self.start {
            0.0
        } else if t >= self.end {
            1.0
        } else {
            (t - self.start) as f64 / (self.end - self.start) as f64
        }
    }
}

/// Largest luminance difference accepted for a crossing distractor.
pub const TC_INTENSITY_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    pub frame_size: (usize, usize),
    pub length: usize,
    pub target: ShapeSpec,
    pub distractors: Vec<ShapeSpec>,
    pub events: Vec<ChallengeEvent>,
}

impl SceneSpec {
    /// Static single-object scene without events.
    pub fn still(seed: u64, frame_size: (usize, usize), length: usize, target: ShapeSpec) -> Self {
        Self {
            seed,
            frame_size,
            length,
            target,
            distractors: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::Invalid("scene length must be at least 1".into()));
        }
        if self.frame_size.0 == 0 || self.frame_size.1 == 0 {
            return Err(Error::Invalid(format!("frame size {:?}", self.frame_size)));
        }
        for s in std::iter::once(&self.target).chain(&self.distractors) {
            if !(s.size > 0.0 && s.size.is_finite() && s.aspect > 0.0 && s.aspect.is_finite()) {
                return Err(Error::Invalid(format!("shape size {} aspect {}", s.size, s.aspect)));
            }
            s.trajectory.validate()?;
        }
        for e in &self.events {
            if e.start > e.end || e.end >= self.length {
                return Err(Error::Invalid(format!(
                    "{} event range [{}, {}] outside 0..{}",
                    e.attribute, e.start, e.end, self.length
                )));
            }
            let ok = matches!(
                (e.attribute, &e.params),
                (Attribute::FOC | Attribute::POC, EventParams::Occluder { .. })
                    | (Attribute::AS, EventParams::Noise { .. })
                    | (Attribute::IV, EventParams::Gain { .. })
                    | (Attribute::SV, EventParams::Scale { .. })
                    | (Attribute::ROT, EventParams::Rotation { .. })
                    | (Attribute::DEF, EventParams::Deform { .. })
                    | (Attribute::CM, EventParams::Shift { .. })
                    | (Attribute::MB, EventParams::Blur { .. })
                    | (Attribute::LR, EventParams::Pixelate { .. })
                    | (Attribute::ARC, EventParams::Aspect { .. })
                    | (Attribute::VC, EventParams::ColorSwap { .. })
                    | (Attribute::BC, EventParams::Clutter { .. })
                    | (Attribute::TC, EventParams::Crossing { .. })
                    | (Attribute::OV | Attribute::MS, EventParams::None)
            );
            if !ok {
                let msg = if e.attribute == Attribute::FM {
                    "FM is derived from the trajectory and cannot be an event".to_string()
                } else {
                    format!("{} event has mismatched parameters {:?}", e.attribute, e.params)
                };
                return Err(Error::Invalid(msg));
            }
            if let EventParams::Crossing { distractor } = e.params {
                let d = self
                    .distractors
                    .get(distractor)
                    .ok_or_else(|| Error::Invalid(format!("TC event references missing distractor {distractor}")))?;
                let diff = (d.color.intensity() - self.target.color.intensity()).abs();
                if diff >= TC_INTENSITY_TOLERANCE {
                    return Err(Error::Invalid(format!("TC distractor intensity differs by {diff:.3}")));
                }
            }
        }
        Ok(())
    }
}
