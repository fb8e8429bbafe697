//! Zero-normalized cross-correlation template tracker with a local search
//! window, emitting the observation bundle the switcher consumes.

use crate::error::{Error, Result};
use crate::frame::{crop_resize, sample_grid, Frame, Patch};
use crate::geometry::BoundingBox;
use crate::nn::linalg::dot;
use crate::types::{TrackerObservation, LANG_EMBED_DIM, RESPONSE_LEN, RESPONSE_SIDE, RESULT_IMAGE_SIDE};

pub const TEMPLATE_SIDE: usize = 32;
/// Distance between neighbouring offsets, in template pixels.
pub const GRID_STEP: usize = 2;
pub const DEFAULT_SEARCH_SCALE: f64 = 2.5;
/// Evaluated in this order; a later scale wins only with a strictly higher peak.
pub const DEFAULT_SCALE_STEPS: [f64; 3] = [1.0, 0.95, 1.05];
pub const DEFAULT_SCALE_PENALTY: f64 = 0.98;
pub const VARIANCE_FLOOR: f64 = 1e-12;

const HALF: usize = RESPONSE_SIDE / 2;
const WINDOW_SIDE: usize = TEMPLATE_SIDE + 2 * HALF * GRID_STEP;
const N: usize = TEMPLATE_SIDE * TEMPLATE_SIDE * 3;
const ROW: usize = TEMPLATE_SIDE * 3;

/// Normalized template: zero mean, unit norm; `None` when the raw patch is
/// constant.
pub(crate) fn normalize(patch: &[f64]) -> Option<Vec<f64>> {
    let n = patch.len() as f64;
    let mean = patch.iter().sum::<f64>() / n;
    let var = patch.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var < VARIANCE_FLOOR {
        return None;
    }
    let norm = (var * n).sqrt();
    Some(patch.iter().map(|v| (v - mean) / norm).collect())
}

#[derive(Clone, Debug)]
pub struct LocalTracker {
    template: Patch,
    normalized: Option<Vec<f64>>,
    bbox: BoundingBox,
    pub search_scale: f64,
    pub scale_steps: Vec<f64>,
    /// Multiplies the peak of every non-unit scale before comparison.
    pub scale_penalty: f64,
}

/// Result of one local search, before any state update.
#[derive(Clone, Debug)]
pub struct SearchResult {
    pub bbox: BoundingBox,
    pub confidence: f64,
    pub response_map: Vec<f64>,
    pub scale: f64,
    pub offset: (i64, i64),
}

impl LocalTracker {
    pub fn init(frame: &Frame, bbox: BoundingBox) -> Result<Self> {
        let mut t = Self {
            template: Patch::zeros(TEMPLATE_SIDE, TEMPLATE_SIDE),
            normalized: None,
            bbox,
            search_scale: DEFAULT_SEARCH_SCALE,
            scale_steps: DEFAULT_SCALE_STEPS.to_vec(),
            scale_penalty: DEFAULT_SCALE_PENALTY,
        };
        t.reinit(frame, bbox)?;
        Ok(t)
    }

    /// Replaces template and box, keeping the search configuration.
    pub fn reinit(&mut self, frame: &Frame, bbox: BoundingBox) -> Result<()> {
        bbox.validate()?;
        if bbox.is_empty() {
            return Err(Error::Invalid(format!("tracker init needs a positive-area box, got {bbox:?}")));
        }
        if bbox.clip(frame.width() as f64, frame.height() as f64).is_empty() {
            return Err(Error::Invalid(format!("tracker init box {bbox:?} lies outside the frame")));
        }
        self.template = crop_resize(frame, &bbox, TEMPLATE_SIDE, TEMPLATE_SIDE);
        self.normalized = normalize(&self.template.data);
        self.bbox = bbox;
        Ok(())
    }

    /// Moves the search center without touching the template.
    pub fn relocate(&mut self, bbox: BoundingBox) {
        self.bbox = bbox;
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    pub fn template(&self) -> &Patch {
        &self.template
    }

    /// Searches around `center` without touching the tracker state.
    pub fn search(&self, frame: &Frame, center: &BoundingBox) -> SearchResult {
        let mut best: Option<SearchResult> = None;
        let mut best_peak = f64::NEG_INFINITY;
        for &s in &self.scale_steps {
            let (map, peak, arg) = self.response_at_scale(frame, center, s);
            let score = if s == 1.0 { peak } else { peak * self.scale_penalty };
            if best.is_none() || score > best_peak {
                best_peak = score;
                let (w, h) = (center.w * s, center.h * s);
                let (sx, sy) = (w / TEMPLATE_SIDE as f64, h / TEMPLATE_SIDE as f64);
                let (dx, dy) = (arg % RESPONSE_SIDE, arg / RESPONSE_SIDE);
                let (ox, oy) = (dx as i64 - HALF as i64, dy as i64 - HALF as i64);
                let x1 = center.x1 + (center.w - w) / 2.0 + (GRID_STEP as i64 * ox) as f64 * sx;
                let y1 = center.y1 + (center.h - h) / 2.0 + (GRID_STEP as i64 * oy) as f64 * sy;
                let confidence = map[arg];
                best = Some(SearchResult {
                    bbox: clamp_center(BoundingBox::new(x1, y1, w, h), frame),
                    confidence,
                    response_map: map,
                    scale: s,
                    offset: (ox, oy),
                });
            }
        }
        best.expect("at least one scale step")
    }

    /// Response map (mapped to `[0, 1]`), its peak and argmax. Equal peaks
    /// resolve to the offset nearest the window center.
    fn response_at_scale(&self, frame: &Frame, center: &BoundingBox, s: f64) -> (Vec<f64>, f64, usize) {
        let Some(tpl) = &self.normalized else {
            return (vec![0.0; RESPONSE_LEN], 0.0, RESPONSE_LEN / 2);
        };
        let (w, h) = (center.w * s, center.h * s);
        let x1 = center.x1 + (center.w - w) / 2.0;
        let y1 = center.y1 + (center.h - h) / 2.0;
        let lo = -((HALF * GRID_STEP) as i64);
        let hi = (TEMPLATE_SIDE + HALF * GRID_STEP) as i64;
        let window = sample_grid(
            frame,
            x1,
            y1,
            w / TEMPLATE_SIDE as f64,
            h / TEMPLATE_SIDE as f64,
            lo..hi,
            lo..hi,
        );
        debug_assert_eq!(window.width, WINDOW_SIDE);
        let mut map = vec![0.0; RESPONSE_LEN];
        let mut peak = f64::NEG_INFINITY;
        let mut arg = 0;
        let mut best_dist = usize::MAX;
        for gy in 0..RESPONSE_SIDE {
            for gx in 0..RESPONSE_SIDE {
                let (ox, oy) = (gx * GRID_STEP, gy * GRID_STEP);
                let (mut cross, mut sum, mut sq) = (0.0, 0.0, 0.0);
                for r in 0..TEMPLATE_SIDE {
                    let start = ((oy + r) * WINDOW_SIDE + ox) * 3;
                    let row = &window.data[start..start + ROW];
                    cross += dot(&tpl[r * ROW..(r + 1) * ROW], row);
                    sum += row.iter().sum::<f64>();
                    sq += dot(row, row);
                }
                let mean = sum / N as f64;
                let var = (sq / N as f64 - mean * mean).max(0.0);
                let idx = gy * RESPONSE_SIDE + gx;
                if var >= VARIANCE_FLOOR {
                    let r = (cross / (var * N as f64).sqrt()).clamp(-1.0, 1.0);
                    map[idx] = (r + 1.0) / 2.0;
                }
                let dist = gx.abs_diff(HALF).pow(2) + gy.abs_diff(HALF).pow(2);
                if map[idx] > peak || (map[idx] == peak && dist < best_dist) {
                    peak = map[idx];
                    arg = idx;
                    best_dist = dist;
                }
            }
        }
        (map, peak, arg)
    }

    /// One tracking step: search around the current box and move there.
    pub fn track(&mut self, frame: &Frame) -> TrackerObservation {
        let res = self.search(frame, &self.bbox);
        self.bbox = res.bbox;
        observation(frame, &res)
    }
}

/// Keeps the box center inside the frame.
fn clamp_center(b: BoundingBox, frame: &Frame) -> BoundingBox {
    let (cx, cy) = b.center();
    let (fw, fh) = (frame.width() as f64, frame.height() as f64);
    if (0.0..=fw).contains(&cx) && (0.0..=fh).contains(&cy) {
        return b;
    }
    BoundingBox::from_center(cx.clamp(0.0, fw), cy.clamp(0.0, fh), b.w, b.h)
}

/// Bundles a search result into an observation with a zero language vector.
pub fn observation(frame: &Frame, res: &SearchResult) -> TrackerObservation {
    let img = crop_resize(frame, &res.bbox, RESULT_IMAGE_SIDE, RESULT_IMAGE_SIDE);
    TrackerObservation {
        confidence: res.confidence,
        bbox: res.bbox,
        result_image: img.data,
        response_map: res.response_map.clone(),
        lang_embedding: vec![0.0; LANG_EMBED_DIM],
    }
}
