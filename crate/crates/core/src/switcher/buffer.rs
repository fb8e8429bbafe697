use std::collections::VecDeque;

use crate::types::{TrackerObservation, LANG_EMBED_DIM, RESPONSE_LEN, RESULT_IMAGE_LEN};

/// Ring buffer of the last `capacity` observations, oldest first.
#[derive(Clone, Debug)]
pub struct HistoryBuffer {
    capacity: usize,
    items: VecDeque<TrackerObservation>,
}

impl HistoryBuffer {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "history capacity must be positive");
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() == self.capacity
    }

    pub fn push(&mut self, obs: TrackerObservation) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(obs);
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }

    pub fn latest(&self) -> Option<&TrackerObservation> {
        self.items.back()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TrackerObservation> {
        self.items.iter()
    }

    /// Front-padded network input of length `capacity`.
    pub fn to_input(&self) -> SwitcherInput {
        let obs: Vec<&TrackerObservation> = self.items.iter().collect();
        SwitcherInput::from_observations(&obs, self.capacity)
    }
}

/// Raw per-frame inputs of the switcher, `n` rows each, plus a mask of the
/// rows holding real observations. Padding rows are all zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitcherInput {
    pub n: usize,
    pub scores: Vec<f64>,
    /// Box relative to the newest real box, `n x 4`.
    pub bboxes: Vec<f64>,
    pub images: Vec<f64>,
    pub maps: Vec<f64>,
    pub embeddings: Vec<f64>,
    pub mask: Vec<bool>,
}

/// `[(x1 - x1') / w', (y1 - y1') / h', ln(w / w'), ln(h / h')]` against the
/// reference box; zeros when either box is degenerate.
pub fn relative_box(b: &crate::geometry::BoundingBox, reference: &crate::geometry::BoundingBox) -> [f64; 4] {
    if b.w <= 0.0 || b.h <= 0.0 || reference.w <= 0.0 || reference.h <= 0.0 {
        return [0.0; 4];
    }
    [
        (b.x1 - reference.x1) / reference.w,
        (b.y1 - reference.y1) / reference.h,
        (b.w / reference.w).ln(),
        (b.h / reference.h).ln(),
    ]
}

impl SwitcherInput {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            scores: vec![0.0; n],
            bboxes: vec![0.0; n * 4],
            images: vec![0.0; n * RESULT_IMAGE_LEN],
            maps: vec![0.0; n * RESPONSE_LEN],
            embeddings: vec![0.0; n * LANG_EMBED_DIM],
            mask: vec![false; n],
        }
    }

    /// Keeps the newest `n` observations and front-pads the rest.
    pub fn from_observations(obs: &[&TrackerObservation], n: usize) -> Self {
        let mut input = Self::zeros(n);
        let obs = &obs[obs.len().saturating_sub(n)..];
        let pad = n - obs.len();
        let reference = obs.last().map(|o| o.bbox);
        for (k, o) in obs.iter().enumerate() {
            let r = pad + k;
            input.mask[r] = true;
            input.scores[r] = o.confidence;
            if let Some(reference) = reference {
                input.bboxes[r * 4..(r + 1) * 4].copy_from_slice(&relative_box(&o.bbox, &reference));
            }
            input.images[r * RESULT_IMAGE_LEN..(r + 1) * RESULT_IMAGE_LEN].copy_from_slice(&o.result_image);
            input.maps[r * RESPONSE_LEN..(r + 1) * RESPONSE_LEN].copy_from_slice(&o.response_map);
            input.embeddings[r * LANG_EMBED_DIM..(r + 1) * LANG_EMBED_DIM].copy_from_slice(&o.lang_embedding);
        }
        input
    }

    /// Builds a full window from raw `f32` observation records.
    pub fn from_records<'a>(records: impl ExactSizeIterator<Item = &'a [f32]>) -> Self {
        let obs: Vec<TrackerObservation> = records
            .map(|r| TrackerObservation::from_record(r).expect("record stride"))
            .collect();
        let refs: Vec<&TrackerObservation> = obs.iter().collect();
        Self::from_observations(&refs, refs.len())
    }

    pub fn real_frames(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;

    fn obs(conf: f64, x: f64) -> TrackerObservation {
        let mut o = TrackerObservation::zeros();
        o.confidence = conf;
        o.bbox = BoundingBox::new(x, 10.0, 20.0, 10.0);
        o
    }

    #[test]
    fn ring_keeps_newest() {
        let mut b = HistoryBuffer::new(3);
        for i in 0..5 {
            b.push(obs(i as f64, 0.0));
        }
        let confs: Vec<f64> = b.iter().map(|o| o.confidence).collect();
        assert_eq!(confs, [2.0, 3.0, 4.0]);
        assert!(b.is_full());
        b.clear();
        assert!(b.is_empty());
    }

    #[test]
    fn short_history_is_front_padded() {
        let mut b = HistoryBuffer::new(4);
        b.push(obs(0.5, 0.0));
        b.push(obs(0.7, 10.0));
        let input = b.to_input();
        assert_eq!(input.mask, [false, false, true, true]);
        assert_eq!(input.scores, [0.0, 0.0, 0.5, 0.7]);
        assert_eq!(&input.bboxes[8..12], &[-0.5, 0.0, 0.0, 0.0]);
        assert_eq!(&input.bboxes[12..16], &[0.0; 4]);
        assert!(input.bboxes[..8].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn degenerate_boxes_encode_as_zero() {
        let z = BoundingBox::default();
        let b = BoundingBox::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(relative_box(&z, &b), [0.0; 4]);
        assert_eq!(relative_box(&b, &z), [0.0; 4]);
    }
}
