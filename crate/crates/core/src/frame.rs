//! 8-bit RGB frames and bilinear patch sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "RGB")]
    Rgb,
    #[serde(rename = "THERMAL")]
    Thermal,
}

/// A row-major 3-channel frame. Intensities are stored as 8-bit levels and
/// exposed as `level / 255` in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<u8>,
    modality: Modality,
}

impl Frame {
    pub fn new(width: usize, height: usize, modality: Modality) -> Result<Self> {
        Self::from_raw(width, height, vec![0; width * height * 3], modality)
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>, modality: Modality) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Invalid(format!("frame size {width}x{height}")));
        }
        if data.len() != width * height * 3 {
            return Err(Error::shape("frame pixels", &[width * height * 3], &[data.len()]));
        }
        Ok(Self {
            width,
            height,
            data,
            modality,
        })
    }

    /// Uniform frame of the given colour.
    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        let mut f = Self::new(width, height, Modality::Rgb)?;
        let px = [quantize(rgb[0]), quantize(rgb[1]), quantize(rgb[2])];
        for chunk in f.data.chunks_exact_mut(3) {
            chunk.copy_from_slice(&px);
        }
        Ok(f)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn set_modality(&mut self, modality: Modality) {
        self.modality = modality;
    }

    pub fn raw(&self) -> &[u8] {
        &self.data
    }

    pub fn raw_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * 3 + c] as f64 / 255.0
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [
            self.data[i] as f64 / 255.0,
            self.data[i + 1] as f64 / 255.0,
            self.data[i + 2] as f64 / 255.0,
        ]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i] = quantize(rgb[0]);
        self.data[i + 1] = quantize(rgb[1]);
        self.data[i + 2] = quantize(rgb[2]);
    }

    /// Gray level used by the thermal transform and gradient features.
    #[inline]
    pub fn luma(&self, x: usize, y: usize) -> f64 {
        let [r, g, b] = self.pixel(x, y);
        0.299 * r + 0.587 * g + 0.114 * b
    }
}

/// Rounds an intensity in `[0, 1]` to the nearest 8-bit level.
#[inline]
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// A resampled `height x width x 3` grid of intensities (row-major, RGB
/// interleaved).
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Patch {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height * 3],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * 3 + c]
    }
}

/// Bilinear intensity at continuous coordinate `(px, py)` where pixel `(i, j)`
/// covers `[j, j+1) x [i, i+1)`. Positions outside the frame sample zero.
#[inline]
fn bilinear(frame: &Frame, px: f64, py: f64, out: &mut [f64]) {
    let w = frame.width;
    let h = frame.height;
    if !(px >= 0.0 && py >= 0.0 && px < w as f64 && py < h as f64) {
        out[..3].fill(0.0);
        return;
    }
    // Pixel centres sit at half-integers.
    let fx = px - 0.5;
    let fy = py - 0.5;
    let x0f = fx.floor();
    let y0f = fy.floor();
    let tx = fx - x0f;
    let ty = fy - y0f;
    let clamp_x = |v: f64| (v.max(0.0) as usize).min(w - 1);
    let clamp_y = |v: f64| (v.max(0.0) as usize).min(h - 1);
    let (x0, x1) = (clamp_x(x0f), clamp_x(x0f + 1.0));
    let (y0, y1) = (clamp_y(y0f), clamp_y(y0f + 1.0));
    let d = &frame.data;
    let i00 = (y0 * w + x0) * 3;
    let i01 = (y0 * w + x1) * 3;
    let i10 = (y1 * w + x0) * 3;
    let i11 = (y1 * w + x1) * 3;
    for c in 0..3 {
        let v00 = d[i00 + c] as f64 / 255.0;
        let v01 = d[i01 + c] as f64 / 255.0;
        let v10 = d[i10 + c] as f64 / 255.0;
        let v11 = d[i11 + c] as f64 / 255.0;
        // lerp form keeps constant regions exactly constant
        let top = v00 + tx * (v01 - v00);
        let bottom = v10 + tx * (v11 - v10);
        out[c] = top + ty * (bottom - top);
    }
}

/// Samples a regular grid: output cell `(r, c)` for `r in rows`, `c in cols`
/// reads the frame at `(origin_x + (c + 0.5) * step_x, origin_y + (r + 0.5) * step_y)`.
///
/// Integer `cols`/`rows` offsets relative to the same origin reproduce
/// [`crop_resize`] samples bit-for-bit, which the local tracker relies on.
pub fn sample_grid(
    frame: &Frame,
    origin_x: f64,
    origin_y: f64,
    step_x: f64,
    step_y: f64,
    cols: std::ops::Range<i64>,
    rows: std::ops::Range<i64>,
) -> Patch {
    let out_w = (cols.end - cols.start).max(0) as usize;
    let out_h = (rows.end - rows.start).max(0) as usize;
    let mut patch = Patch::zeros(out_w, out_h);
    let xs: Vec<f64> = cols
        .clone()
        .map(|c| origin_x + (c as f64 + 0.5) * step_x)
        .collect();
    for (ri, r) in rows.enumerate() {
        let py = origin_y + (r as f64 + 0.5) * step_y;
        let row = &mut patch.data[ri * out_w * 3..(ri + 1) * out_w * 3];
        for (ci, &px) in xs.iter().enumerate() {
            bilinear(frame, px, py, &mut row[ci * 3..ci * 3 + 3]);
        }
    }
    patch
}

/// Bilinear resample of `bbox` to `out_w x out_h`, zero outside the frame.
pub fn crop_resize(frame: &Frame, bbox: &BoundingBox, out_w: usize, out_h: usize) -> Patch {
    assert!(out_w >= 1 && out_h >= 1, "crop_resize output must be non-empty");
    let clipped = bbox.clip(frame.width as f64, frame.height as f64);
    if clipped.is_empty() || bbox.is_empty() {
        return Patch::zeros(out_w, out_h);
    }
    sample_grid(
        frame,
        bbox.x1,
        bbox.y1,
        bbox.w / out_w as f64,
        bbox.h / out_h as f64,
        0..out_w as i64,
        0..out_h as i64,
    )
}
