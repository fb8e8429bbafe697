//! Axis-aligned boxes in `[x1, y1, w, h]` pixel form.
//!
//! Pixel `(row i, col j)` occupies the unit square `[j, j+1) x [i, i+1)`, so
//! boxes with integer coordinates cover whole pixels and their IoU can be
//! checked against plain cell counting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x1: f64,
    pub y1: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub const fn new(x1: f64, y1: f64, w: f64, h: f64) -> Self {
        Self { x1, y1, w, h }
    }

    /// Checked constructor: all fields finite, `w >= 0`, `h >= 0`.
    pub fn try_new(x1: f64, y1: f64, w: f64, h: f64) -> Result<Self> {
        let b = Self::new(x1, y1, w, h);
        b.validate()?;
        Ok(b)
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x1, self.y1, self.w, self.h].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Invalid(format!("non-finite box {self:?}")));
        }
        if self.w < 0.0 || self.h < 0.0 {
            return Err(Error::Invalid(format!("negative box extent {self:?}")));
        }
        Ok(())
    }

    pub fn x2(&self) -> f64 {
        self.x1 + self.w
    }

    pub fn y2(&self) -> f64 {
        self.y1 + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x1 + self.w / 2.0, self.y1 + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_empty(&self) -> bool {
        self.w <= 0.0 || self.h <= 0.0
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x1 + dx, self.y1 + dy, self.w, self.h)
    }

    /// Scales extents about the box center.
    pub fn scale(&self, factor: f64) -> Self {
        let (cx, cy) = self.center();
        Self::from_center(cx, cy, self.w * factor, self.h * factor)
    }

    /// Area of the overlap with `other`, zero when disjoint.
    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let iw = self.x2().min(other.x2()) - self.x1.max(other.x1);
        let ih = self.y2().min(other.y2()) - self.y1.max(other.y1);
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }

    /// Intersection with the rectangle `[0, width) x [0, height)`.
    pub fn clip(&self, width: f64, height: f64) -> Self {
        let x1 = self.x1.max(0.0);
        let y1 = self.y1.max(0.0);
        let x2 = self.x2().min(width);
        let y2 = self.y2().min(height);
        Self::new(x1, y1, (x2 - x1).max(0.0), (y2 - y1).max(0.0))
    }
}

/// Intersection over union; 0 when the union is empty.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    // Areas use corner differences so that `iou(a, a)` is exactly 1.
    let area_a = (a.x2() - a.x1) * (a.y2() - a.y1);
    let area_b = (b.x2() - b.x1) * (b.y2() - b.y1);
    let inter = a.intersection_area(b);
    let union = area_a + area_b - inter;
    if union <= 0.0 || inter <= 0.0 {
        0.0
    } else {
        (inter / union).min(1.0)
    }
}

/// Euclidean distance between box centers.
pub fn center_error(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Counts unit lattice cells covered by each box. Only valid for integer
    /// coordinates, where it is exact.
    fn lattice_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
        let covers = |bx: &BoundingBox, i: i64, j: i64| {
            (j as f64) >= bx.x1 && ((j + 1) as f64) <= bx.x2() && (i as f64) >= bx.y1
                && ((i + 1) as f64) <= bx.y2()
        };
        let lo_x = a.x1.min(b.x1) as i64;
        let hi_x = a.x2().max(b.x2()) as i64;
        let lo_y = a.y1.min(b.y1) as i64;
        let hi_y = a.y2().max(b.y2()) as i64;
        let (mut inter, mut union) = (0u64, 0u64);
        for i in lo_y..hi_y {
            for j in lo_x..hi_x {
                let (ca, cb) = (covers(a, i, j), covers(b, i, j));
                inter += (ca && cb) as u64;
                union += (ca || cb) as u64;
            }
        }
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    #[test]
    fn iou_examples() {
        let a = BoundingBox::new(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &BoundingBox::new(20.0, 20.0, 5.0, 5.0)), 0.0);
        let b = BoundingBox::new(5.0, 5.0, 10.0, 10.0);
        assert_eq!(lattice_iou(&a, &b), 25.0 / 175.0);
        assert!((iou(&a, &b) - 25.0 / 175.0).abs() < 1e-15);
    }

    #[test]
    fn iou_degenerate_is_zero() {
        let empty = BoundingBox::new(3.0, 3.0, 0.0, 4.0);
        assert_eq!(iou(&empty, &empty), 0.0);
        assert_eq!(iou(&empty, &BoundingBox::new(0.0, 0.0, 10.0, 10.0)), 0.0);
    }

    #[test]
    fn center_error_examples() {
        let a = BoundingBox::new(0.0, 0.0, 10.0, 10.0);
        assert_eq!(center_error(&a, &a), 0.0);
        let b = BoundingBox::new(5.0, 5.0, 10.0, 10.0);
        assert!((center_error(&a, &b) - 50f64.sqrt()).abs() < 1e-12);
        let c = BoundingBox::new(0.0, 0.0, 2.0, 2.0);
        let d = BoundingBox::new(3.0, 0.0, 2.0, 2.0);
        assert_eq!(center_error(&c, &d), 3.0);
    }

    #[test]
    fn validation_rejects_bad_boxes() {
        assert!(BoundingBox::try_new(0.0, 0.0, -1.0, 2.0).is_err());
        assert!(BoundingBox::try_new(f64::NAN, 0.0, 1.0, 2.0).is_err());
        assert!(BoundingBox::try_new(0.0, 0.0, 0.0, 0.0).is_ok());
    }

    fn int_box() -> impl Strategy<Value = BoundingBox> {
        (-20i32..40, -20i32..40, 0i32..30, 0i32..30)
            .prop_map(|(x, y, w, h)| BoundingBox::new(x as f64, y as f64, w as f64, h as f64))
    }

    fn real_box() -> impl Strategy<Value = BoundingBox> {
        (-50.0..50.0f64, -50.0..50.0f64, 0.0..40.0f64, 0.0..40.0f64)
            .prop_map(|(x, y, w, h)| BoundingBox::new(x, y, w, h))
    }

    proptest! {
        #[test]
        fn iou_matches_lattice_oracle(a in int_box(), b in int_box()) {
            prop_assert!((iou(&a, &b) - lattice_iou(&a, &b)).abs() < 1e-12);
        }

        #[test]
        fn iou_symmetric_and_bounded(a in real_box(), b in real_box()) {
            let ab = iou(&a, &b);
            prop_assert_eq!(ab, iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn iou_self_is_one(a in real_box()) {
            prop_assume!(a.w > 1e-6 && a.h > 1e-6);
            prop_assert_eq!(iou(&a, &a), 1.0);
        }

        #[test]
        fn center_error_is_a_metric(a in real_box(), b in real_box(), c in real_box()) {
            let ab = center_error(&a, &b);
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, center_error(&b, &a));
            prop_assert!(ab <= center_error(&a, &c) + center_error(&c, &b) + 1e-9);
            prop_assert_eq!(center_error(&a, &a), 0.0);
        }
    }
}
