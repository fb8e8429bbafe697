use super::features::cell_span;
use super::GRID;
use crate::frame::{crop_resize, Frame, Patch};
use crate::geometry::BoundingBox;
use crate::localtrack::normalize;
use crate::nn::linalg::dot;

/// Center of grid cell `c` in pixels.
pub fn cell_center(c: usize, frame: &Frame) -> (f64, f64) {
    let (x0, x1) = cell_span(c % GRID, frame.width());
    let (y0, y1) = cell_span(c / GRID, frame.height());
    ((x0 + x1) as f64 / 2.0, (y0 + y1) as f64 / 2.0)
}

/// Shifts a window center so the window stays inside the frame.
fn inside((cx, cy): (f64, f64), window: (f64, f64), frame: &Frame) -> (f64, f64) {
    let clamp = |c: f64, half: f64, n: f64| if 2.0 * half >= n { n / 2.0 } else { c.clamp(half, n - half) };
    (
        clamp(cx, window.0 / 2.0, frame.width() as f64),
        clamp(cy, window.1 / 2.0, frame.height() as f64),
    )
}

/// Template attention over the grid: for every cell, the ZNCC between the
/// template and a `window`-sized crop centered on the cell (shifted inside the frame), mapped to
/// `[0, 1]` and normalized to sum to one. A constant template, or a frame
/// where every cell is constant, yields the uniform map.
pub fn tanet_attention(frame: &Frame, template: &Patch, window: (f64, f64)) -> Vec<f64> {
    let cells = GRID * GRID;
    let uniform = vec![1.0 / cells as f64; cells];
    let Some(tpl) = normalize(&template.data) else {
        return uniform;
    };
    let mut map = vec![0.0; cells];
    for (c, m) in map.iter_mut().enumerate() {
        let (cx, cy) = inside(cell_center(c, frame), window, frame);
        let crop = crop_resize(frame, &BoundingBox::from_center(cx, cy, window.0, window.1), template.width, template.height);
        if let Some(cand) = normalize(&crop.data) {
            let r = dot(&tpl, &cand).clamp(-1.0, 1.0);
            *m = (r + 1.0) / 2.0;
        }
    }
    let total: f64 = map.iter().sum();
    if total <= 0.0 {
        return uniform;
    }
    map.iter_mut().for_each(|m| *m /= total);
    map
}

/// Whether every entry equals the first (the no-information map).
pub fn is_uniform(map: &[f64]) -> bool {
    map.iter().all(|&v| v == map[0])
}

/// Argmax cell of `map` (lowest index on ties).
pub fn argmax(map: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in map.iter().enumerate() {
        if v > map[best] {
            best = i;
        }
    }
    best
}

/// The `window` box at the argmax cell, expanded 2x about its center.
pub fn attended_search_box(map: &[f64], frame: &Frame, window: (f64, f64)) -> BoundingBox {
    let (cx, cy) = cell_center(argmax(map), frame);
    BoundingBox::from_center(cx, cy, 2.0 * window.0, 2.0 * window.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_frame_gives_uniform_map() {
        let f = Frame::filled(128, 128, [0.4, 0.4, 0.4]).unwrap();
        let mut tpl = Patch::zeros(32, 32);
        for (i, v) in tpl.data.iter_mut().enumerate() {
            *v = (i % 7) as f64 / 7.0;
        }
        let map = tanet_attention(&f, &tpl, (16.0, 16.0));
        assert!(is_uniform(&map));
        assert!((map.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_template_gives_uniform_map() {
        let f = Frame::filled(64, 64, [0.1, 0.5, 0.4]).unwrap();
        let tpl = Patch { width: 8, height: 8, data: vec![0.3; 8 * 8 * 3] };
        assert!(is_uniform(&tanet_attention(&f, &tpl, (8.0, 8.0))));
    }

    #[test]
    fn search_box_is_twice_the_window() {
        let f = Frame::filled(128, 128, [0.0; 3]).unwrap();
        let mut map = vec![0.0; GRID * GRID];
        map[GRID + 2] = 1.0;
        let b = attended_search_box(&map, &f, (10.0, 6.0));
        assert_eq!(b.center(), (20.0, 12.0));
        assert_eq!((b.w, b.h), (20.0, 12.0));
    }
}
