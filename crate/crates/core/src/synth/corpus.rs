use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::render::generate;
use super::scenes::{switch_scene, MIN_SCENE_LENGTH};
use crate::error::{Error, Result};
use crate::geometry::iou;
use crate::io::{create_dir, write_bytes, write_iou_log, write_observation_log, write_sequence};
use crate::localtrack::LocalTracker;
use crate::types::{Attribute, LanguageSentence, SequenceRecord, TrackerObservation};

pub struct CorpusOptions<'a> {
    pub length: usize,
    pub write_frames: bool,
    /// Language vector stored in every observation; zeros when absent.
    pub embed: Option<&'a (dyn Fn(&LanguageSentence) -> Vec<f64> + Sync)>,
}

impl Default for CorpusOptions<'_> {
    fn default() -> Self {
        Self {
            length: 80,
            write_frames: false,
            embed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub name: String,
    pub seed: u64,
    pub attributes: Vec<Attribute>,
    pub length: usize,
    pub sentence: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: u64,
    pub sequences: Vec<CorpusEntry>,
}

impl CorpusManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = crate::io::read_text(&path)?;
        serde_json::from_str(&text).map_err(|source| Error::Json { path, source })
    }
}

/// Attributes of sequence `index`: one primary attribute in rotation over
/// all 17, thermal crossover added to every third sequence, and an optional
/// random secondary.
fn attributes_for(seed: u64, index: usize) -> (Attribute, Vec<Attribute>) {
    let primary = Attribute::ALL[index % Attribute::ALL.len()];
    let mut extra = Vec::new();
    if index % 3 == 1 {
        extra.push(Attribute::TC);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index as u64 ^ 0xA77);
    if rng.gen_bool(0.3) {
        extra.push(Attribute::ALL[rng.gen_range(0..Attribute::ALL.len())]);
    }
    (primary, extra)
}

/// Runs a fresh local tracker from the first ground-truth box.
pub fn run_local_tracker(record: &SequenceRecord, lang: &[f64]) -> Result<(Vec<TrackerObservation>, Vec<f64>)> {
    let mut tracker = LocalTracker::init(&record.frames[0], record.gt[0])?;
    let mut obs = Vec::with_capacity(record.len());
    let mut ious = Vec::with_capacity(record.len());
    for (frame, gt) in record.frames.iter().zip(&record.gt) {
        let mut o = tracker.track(frame);
        o.lang_embedding.copy_from_slice(lang);
        ious.push(iou(&o.bbox, gt));
        obs.push(o);
    }
    Ok((obs, ious))
}

/// Generates `n` sequences, tracks each with the local tracker and writes
/// `manifest.json`, `<name>.obs` observation logs and `<name>.iou` logs
/// (plus the sequence directories when `write_frames`).
pub fn make_switch_corpus(dir: &Path, seed: u64, n: usize, options: &CorpusOptions<'_>) -> Result<CorpusManifest> {
    if options.length < MIN_SCENE_LENGTH {
        return Err(Error::Config(format!(
            "corpus sequences need at least {MIN_SCENE_LENGTH} frames, got {}",
            options.length
        )));
    }
    create_dir(dir)?;
    let entries = (0..n)
        .into_par_iter()
        .map(|i| -> Result<CorpusEntry> {
            let seq_seed = seed ^ i as u64;
            let (primary, extra) = attributes_for(seed, i);
            let spec = switch_scene(seq_seed, options.length, primary, &extra);
            let mut record = generate(&spec)?;
            record.name = format!("seq_{i:05}");
            let lang = match options.embed {
                Some(f) => f(&record.sentence),
                None => vec![0.0; crate::types::LANG_EMBED_DIM],
            };
            let (obs, ious) = run_local_tracker(&record, &lang)?;
            write_observation_log(&dir.join(format!("{}.obs", record.name)), &obs)?;
            write_iou_log(&dir.join(format!("{}.iou", record.name)), &ious)?;
            if options.write_frames {
                write_sequence(&record, &dir.join(&record.name))?;
            }
            Ok(CorpusEntry {
                name: record.name.clone(),
                seed: seq_seed,
                attributes: record.attributes.iter().copied().collect(),
                length: record.len(),
                sentence: record.sentence.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = CorpusManifest {
        seed,
        sequences: entries,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|source| Error::Json {
        path: dir.join("manifest.json"),
        source,
    })?;
    write_bytes(&dir.join("manifest.json"), format!("{json}\n").as_bytes())?;
    Ok(manifest)
}
