use std::path::Path;
use std::sync::Arc;

use log::warn;

use super::buffer::SwitcherInput;
use crate::error::{Error, Result};
use crate::io::{read_iou_log, read_observation_log, read_text, write_bytes, ObservationLog};
use crate::synth::CorpusManifest;

/// Windows averaging above this IoU are labelled healthy (0).
pub const HEALTHY_IOU: f64 = 0.7;
/// Windows averaging below this IoU are labelled failed (1).
pub const FAILED_IOU: f64 = 0.5;

/// `Some(0)` healthy, `Some(1)` failed, `None` inside the discard band.
pub fn window_label(mean_iou: f64) -> Option<u8> {
    if mean_iou > HEALTHY_IOU {
        Some(0)
    } else if mean_iou < FAILED_IOU {
        Some(1)
    } else {
        None
    }
}

/// Stride used between consecutive windows of length `window`.
pub fn window_stride(window: usize) -> usize {
    (window / 2).max(1)
}

/// Labelled windows `(start, mean IoU, label)` over one IoU log.
pub fn label_windows(ious: &[f64], window: usize) -> Vec<(usize, f64, u8)> {
    if window == 0 || ious.len() < window {
        return Vec::new();
    }
    (0..=ious.len() - window)
        .step_by(window_stride(window))
        .filter_map(|s| {
            let mean = ious[s..s + window].iter().sum::<f64>() / window as f64;
            window_label(mean).map(|l| (s, mean, l))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabeledWindow {
    /// Index into [`SwitchDataset::logs`].
    pub sequence: usize,
    pub start: usize,
    pub mean_iou: f64,
    pub label: u8,
}

#[derive(Clone, Debug)]
pub struct SequenceLog {
    pub name: String,
    pub observations: ObservationLog,
}

/// Observation logs shared between subsets, plus the labelled windows.
#[derive(Clone, Debug)]
pub struct SwitchDataset {
    pub window: usize,
    pub logs: Arc<Vec<SequenceLog>>,
    pub windows: Vec<LabeledWindow>,
}

impl SwitchDataset {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn input(&self, w: &LabeledWindow) -> SwitcherInput {
        let log = &self.logs[w.sequence].observations;
        SwitcherInput::from_records((w.start..w.start + self.window).map(|i| log.record(i)))
    }

    /// `(healthy, failed)` window counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let failed = self.windows.iter().filter(|w| w.label == 1).count();
        (self.windows.len() - failed, failed)
    }

    /// Windows whose sequence satisfies `keep`, sharing the logs.
    pub fn filter_sequences(&self, keep: impl Fn(usize) -> bool) -> Self {
        Self {
            window: self.window,
            logs: Arc::clone(&self.logs),
            windows: self.windows.iter().copied().filter(|w| keep(w.sequence)).collect(),
        }
    }

    /// `(train, held_out)`: the last `held_out` fraction of sequences
    /// (at least one when there are two or more) is held out, optionally
    /// capping the training windows at `max_train`.
    pub fn split(&self, held_out: f64, max_train: Option<usize>) -> (Self, Self) {
        let n = self.logs.len();
        let mut held = ((n as f64) * held_out.clamp(0.0, 1.0)).round() as usize;
        if held == 0 && held_out > 0.0 && n > 1 {
            held = 1;
        }
        let first_held = n - held.min(n);
        let mut train = self.filter_sequences(|s| s < first_held);
        if let Some(m) = max_train {
            train.windows.truncate(m);
        }
        (train, self.filter_sequences(|s| s >= first_held))
    }

    pub fn with_windows(&self, windows: Vec<LabeledWindow>) -> Self {
        Self {
            window: self.window,
            logs: Arc::clone(&self.logs),
            windows,
        }
    }
}

fn labels_path(dir: &Path, name: &str) -> std::path::PathBuf {
    dir.join(format!("{name}.labels"))
}

/// Labels every sequence of a switch corpus, writes a `<name>.labels`
/// sidecar (`start label` per line) next to each log, and returns the
/// dataset. Logs shorter than `window` are skipped with a warning.
pub fn harvest_clips(dir: &Path, window: usize) -> Result<SwitchDataset> {
    if window == 0 {
        return Err(Error::Config("history length must be positive".into()));
    }
    let manifest = CorpusManifest::read(dir)?;
    let mut logs = Vec::new();
    let mut windows = Vec::new();
    for entry in &manifest.sequences {
        let obs = read_observation_log(&dir.join(format!("{}.obs", entry.name)))?;
        let ious = read_iou_log(&dir.join(format!("{}.iou", entry.name)))?;
        if ious.len() != obs.frames {
            return Err(Error::Invalid(format!(
                "{}: {} observations but {} IoU values",
                entry.name,
                obs.frames,
                ious.len()
            )));
        }
        if obs.frames < window {
            warn!("skipping {}: {} frames is shorter than the history of {window}", entry.name, obs.frames);
            continue;
        }
        let labelled = label_windows(&ious, window);
        let text: String = labelled.iter().map(|(s, _, l)| format!("{s} {l}\n")).collect();
        write_bytes(&labels_path(dir, &entry.name), text.as_bytes())?;
        let sequence = logs.len();
        windows.extend(labelled.into_iter().map(|(start, mean_iou, label)| LabeledWindow {
            sequence,
            start,
            mean_iou,
            label,
        }));
        logs.push(SequenceLog {
            name: entry.name.clone(),
            observations: obs,
        });
    }
    Ok(SwitchDataset {
        window,
        logs: Arc::new(logs),
        windows,
    })
}

/// Loads a previously harvested corpus from its sidecar label files.
pub fn load_dataset(dir: &Path, window: usize) -> Result<SwitchDataset> {
    let manifest = CorpusManifest::read(dir)?;
    let mut logs = Vec::new();
    let mut windows = Vec::new();
    for entry in &manifest.sequences {
        let path = labels_path(dir, &entry.name);
        if !path.exists() {
            continue;
        }
        let obs = read_observation_log(&dir.join(format!("{}.obs", entry.name)))?;
        let ious = read_iou_log(&dir.join(format!("{}.iou", entry.name)))?;
        let text = read_text(&path)?;
        let sequence = logs.len();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = || Error::parse(&path, i + 1, format!("expected `start label`, got {line:?}"));
            let mut parts = line.split_whitespace();
            let start: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let label: u8 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            if label > 1 || start + window > obs.frames || parts.next().is_some() {
                return Err(bad());
            }
            let mean_iou = ious[start..start + window].iter().sum::<f64>() / window as f64;
            windows.push(LabeledWindow {
                sequence,
                start,
                mean_iou,
                label,
            });
        }
        logs.push(SequenceLog {
            name: entry.name.clone(),
            observations: obs,
        });
    }
    Ok(SwitchDataset {
        window,
        logs: Arc::new(logs),
        windows,
    })
}
