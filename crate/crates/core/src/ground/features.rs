use std::f64::consts::PI;

use super::{GRID, SPATIAL_DIM, VISUAL_DIM};
use crate::frame::Frame;

/// Per-cell visual descriptors of a frame on the `GRID x GRID` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFeatures {
    /// `GRID^2 x VISUAL_DIM`, row-major over cells (row-major cell order).
    pub data: Vec<f64>,
}

impl GridFeatures {
    pub fn cell(&self, c: usize) -> &[f64] {
        &self.data[c * VISUAL_DIM..(c + 1) * VISUAL_DIM]
    }
}

const RUN_CAP: usize = 48;
const RUN_SCALE: f64 = 32.0;
const STEP_TOLERANCE: f64 = 0.1;
const SIMILAR_TOLERANCE: f64 = 0.15;
const EDGE_THRESHOLD: f64 = 0.1;
const CHROMA_FLOOR: f64 = 0.1;

/// Pixel range `[lo, hi)` of grid index `i` along an axis of `n` pixels.
pub fn cell_span(i: usize, n: usize) -> (usize, usize) {
    let lo = (i * n / GRID).min(n.saturating_sub(1));
    let hi = ((i + 1) * n / GRID).clamp(lo + 1, n.max(1));
    (lo, hi)
}

fn max_diff(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

fn hue(p: [f64; 3]) -> Option<f64> {
    let max = p[0].max(p[1]).max(p[2]);
    let min = p[0].min(p[1]).min(p[2]);
    let c = max - min;
    if c < CHROMA_FLOOR {
        return None;
    }
    let h = if max == p[0] {
        ((p[1] - p[2]) / c).rem_euclid(6.0)
    } else if max == p[1] {
        (p[2] - p[0]) / c + 2.0
    } else {
        (p[0] - p[1]) / c + 4.0
    };
    Some(h / 6.0)
}

fn bin8(unit: f64) -> usize {
    ((unit * 8.0).floor() as usize).min(7)
}

struct Pixels<'a> {
    frame: &'a Frame,
    w: usize,
    h: usize,
}

impl Pixels<'_> {
    fn run(&self, x: usize, y: usize, dx: isize, dy: isize) -> usize {
        let (mut cx, mut cy) = (x as isize, y as isize);
        let mut prev = self.frame.pixel(x, y);
        let mut n = 0;
        while n < RUN_CAP {
            let (nx, ny) = (cx + dx, cy + dy);
            if nx < 0 || ny < 0 || nx >= self.w as isize || ny >= self.h as isize {
                break;
            }
            let p = self.frame.pixel(nx as usize, ny as usize);
            if max_diff(p, prev) > STEP_TOLERANCE {
                break;
            }
            prev = p;
            cx = nx;
            cy = ny;
            n += 1;
        }
        n
    }
}

/// Computes the 38 descriptors of every cell:
///
/// | dims  | content |
/// |-------|---------|
/// | 0-2   | mean RGB |
/// | 3-5   | RGB standard deviation |
/// | 6-13  | hue histogram of chromatic pixels |
/// | 14-21 | magnitude-weighted gradient orientation histogram |
/// | 22    | edge density |
/// | 23-25 | 3x3-cell neighbourhood mean RGB |
/// | 26-28 | cell mean minus frame mean |
/// | 29-32 | similar-colour run lengths left, right, up, down from the cell center |
/// | 33    | fraction of cell pixels similar to the center pixel |
/// | 34-35 | centroid of those pixels relative to the cell center |
/// | 36    | mean chroma |
/// | 37    | luma standard deviation |
pub fn grid_features(frame: &Frame) -> GridFeatures {
    let (w, h) = (frame.width(), frame.height());
    let mut luma = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            luma[y * w + x] = frame.luma(x, y);
        }
    }
    let at = |x: usize, y: usize| luma[y * w + x];
    let mut frame_mean = [0.0; 3];
    for y in 0..h {
        for x in 0..w {
            let p = frame.pixel(x, y);
            for c in 0..3 {
                frame_mean[c] += p[c];
            }
        }
    }
    frame_mean.iter_mut().for_each(|m| *m /= (w * h) as f64);

    let cells = GRID * GRID;
    let mut data = vec![0.0; cells * VISUAL_DIM];
    let mut means = vec![[0.0; 3]; cells];
    let px = Pixels { frame, w, h };
    for row in 0..GRID {
        let (y0, y1) = cell_span(row, h);
        for col in 0..GRID {
            let (x0, x1) = cell_span(col, w);
            let f = &mut data[(row * GRID + col) * VISUAL_DIM..(row * GRID + col + 1) * VISUAL_DIM];
            let n = ((x1 - x0) * (y1 - y0)) as f64;
            let (ccx, ccy) = ((x0 + x1) / 2, (y0 + y1) / 2);
            let center = frame.pixel(ccx.min(w - 1), ccy.min(h - 1));
            let mut sum = [0.0; 3];
            let mut sq = [0.0; 3];
            let (mut lsum, mut lsq, mut chroma) = (0.0, 0.0, 0.0);
            let (mut sim, mut sx, mut sy) = (0.0, 0.0, 0.0);
            for y in y0..y1 {
                for x in x0..x1 {
                    let p = frame.pixel(x, y);
                    for c in 0..3 {
                        sum[c] += p[c];
                        sq[c] += p[c] * p[c];
                    }
                    let l = at(x, y);
                    lsum += l;
                    lsq += l * l;
                    let mx = p[0].max(p[1]).max(p[2]);
                    let mn = p[0].min(p[1]).min(p[2]);
                    chroma += mx - mn;
                    if let Some(hh) = hue(p) {
                        f[6 + bin8(hh)] += 1.0 / n;
                    }
                    let gx = at((x + 1).min(w - 1), y) - at(x.saturating_sub(1), y);
                    let gy = at(x, (y + 1).min(h - 1)) - at(x, y.saturating_sub(1));
                    let mag = (gx * gx + gy * gy).sqrt();
                    if mag > 0.0 {
                        let ang = gy.atan2(gx).rem_euclid(2.0 * PI) / (2.0 * PI);
                        f[14 + bin8(ang)] += mag / n;
                    }
                    if mag > EDGE_THRESHOLD {
                        f[22] += 1.0 / n;
                    }
                    if max_diff(p, center) <= SIMILAR_TOLERANCE {
                        sim += 1.0;
                        sx += x as f64 + 0.5;
                        sy += y as f64 + 0.5;
                    }
                }
            }
            for c in 0..3 {
                let m = sum[c] / n;
                f[c] = m;
                f[3 + c] = (sq[c] / n - m * m).max(0.0).sqrt();
                f[26 + c] = m - frame_mean[c];
            }
            means[row * GRID + col] = [f[0], f[1], f[2]];
            let scale = RUN_SCALE;
            f[29] = px.run(ccx, ccy, -1, 0) as f64 / scale;
            f[30] = px.run(ccx, ccy, 1, 0) as f64 / scale;
            f[31] = px.run(ccx, ccy, 0, -1) as f64 / scale;
            f[32] = px.run(ccx, ccy, 0, 1) as f64 / scale;
            f[33] = sim / n;
            if sim > 0.0 {
                let (cw, ch) = ((x1 - x0) as f64, (y1 - y0) as f64);
                f[34] = (sx / sim - (x0 as f64 + cw / 2.0)) / cw;
                f[35] = (sy / sim - (y0 as f64 + ch / 2.0)) / ch;
            }
            f[36] = chroma / n;
            let lm = lsum / n;
            f[37] = (lsq / n - lm * lm).max(0.0).sqrt();
        }
    }
    for row in 0..GRID {
        for col in 0..GRID {
            let mut acc = [0.0; 3];
            let mut k = 0.0;
            for r in row.saturating_sub(1)..(row + 2).min(GRID) {
                for c in col.saturating_sub(1)..(col + 2).min(GRID) {
                    for i in 0..3 {
                        acc[i] += means[r * GRID + c][i];
                    }
                    k += 1.0;
                }
            }
            let f = &mut data[(row * GRID + col) * VISUAL_DIM..];
            for i in 0..3 {
                f[23 + i] = acc[i] / k;
            }
        }
    }
    GridFeatures { data }
}

/// Normalized `(x_min, y_min, x_max, y_max, x_center, y_center, w, h)` of
/// every cell, `GRID^2 x 8`.
pub fn spatial_coords() -> Vec<f64> {
    let g = GRID as f64;
    let mut out = Vec::with_capacity(GRID * GRID * SPATIAL_DIM);
    for row in 0..GRID {
        for col in 0..GRID {
            let (x0, y0) = (col as f64 / g, row as f64 / g);
            let (x1, y1) = ((col + 1) as f64 / g, (row + 1) as f64 / g);
            out.extend([x0, y0, x1, y1, (x0 + x1) / 2.0, (y0 + y1) / 2.0, 1.0 / g, 1.0 / g]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptor_layout() {
        let f = Frame::filled(128, 128, [0.2, 0.4, 0.6]).unwrap();
        let g = grid_features(&f);
        assert_eq!(g.data.len(), GRID * GRID * VISUAL_DIM);
        assert!(g.data.iter().all(|v| v.is_finite()));
        let c = g.cell(17);
        let q = |v: f64| (v * 255.0).round() / 255.0;
        assert!((c[0] - q(0.2)).abs() < 1e-12 && (c[2] - q(0.6)).abs() < 1e-12);
        assert!(c[3] < 1e-6 && c[22] == 0.0);
        assert_eq!(c[33], 1.0);
        let hue_mass: f64 = c[6..14].iter().sum();
        assert!((hue_mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spatial_block_is_ordered_and_normalized() {
        let s = spatial_coords();
        assert_eq!(s.len(), GRID * GRID * SPATIAL_DIM);
        for cell in s.chunks(SPATIAL_DIM) {
            assert!(cell[0] < cell[2] && cell[1] < cell[3]);
            assert!(cell.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn odd_frame_sizes_cover_every_pixel() {
        for n in [16, 17, 100, 129] {
            let mut next = 0;
            for i in 0..GRID {
                let (lo, hi) = cell_span(i, n);
                assert_eq!(lo, next);
                assert!(hi > lo);
                next = hi;
            }
            assert_eq!(next, n);
        }
    }

    #[test]
    fn run_lengths_measure_a_square() {
        let mut f = Frame::filled(128, 128, [0.5, 0.5, 0.5]).unwrap();
        for y in 40..64 {
            for x in 40..64 {
                f.set_pixel(x, y, [0.9, 0.1, 0.1]);
            }
        }
        let g = grid_features(&f);
        // Cell (6, 6) spans pixels 48..56; its center pixel is (52, 52).
        let c = g.cell(6 * GRID + 6);
        assert_eq!((c[29] * RUN_SCALE) as usize, 12);
        assert_eq!((c[30] * RUN_SCALE) as usize, 11);
    }
}
