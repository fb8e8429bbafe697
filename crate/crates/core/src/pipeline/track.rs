use std::path::Path;

use log::debug;
use rayon::prelude::*;

use super::config::{Mode, PipelineConfig};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::geometry::BoundingBox;
use crate::ground::{attended_search_box, is_uniform, tanet_attention, Grounder, SentenceEmbedding};
use crate::localtrack::{LocalTracker, SearchResult};
use crate::switcher::{naive_decide, AdaSwitcher, HistoryBuffer, SwitchDecision, SwitcherOptions};
use crate::types::{SequenceRecord, LANG_EMBED_DIM};

/// Models shared read-only by every sequence of a run.
#[derive(Clone, Debug, Default)]
pub struct Models {
    pub grounder: Option<Grounder>,
    pub switcher: Option<AdaSwitcher>,
}

fn must_exist(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} {} does not exist", path.display())))
    }
}

impl Models {
    /// Loads whichever checkpoints `config` names, then checks that every
    /// model the config needs is present.
    pub fn load(config: &PipelineConfig) -> Result<Self> {
        let mut models = Models::default();
        if let (Some(params), Some(vocab)) = (&config.grounding_checkpoint, &config.vocabulary) {
            must_exist(params, "grounding checkpoint")?;
            must_exist(vocab, "vocabulary")?;
            models.grounder = Some(Grounder::load(params, vocab, config.use_spatial_coords)?);
        }
        if let Some(path) = &config.switcher_checkpoint {
            must_exist(path, "switcher checkpoint")?;
            models.switcher = Some(AdaSwitcher::load(path, SwitcherOptions::default())?);
        }
        models.check(config)?;
        Ok(models)
    }

    pub fn check(&self, config: &PipelineConfig) -> Result<()> {
        config.validate()?;
        if config.needs_grounder() && self.grounder.is_none() {
            return Err(Error::Config(format!(
                "mode {}{} needs a grounding checkpoint and vocabulary",
                config.mode,
                if config.ground_every_frame { " with ground_every_frame" } else { "" }
            )));
        }
        if config.use_switcher && self.switcher.is_none() {
            return Err(Error::Config("use_switcher needs a switcher checkpoint".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackOutput {
    /// One `(box, confidence)` per frame, frame 1 included.
    pub results: Vec<(BoundingBox, f64)>,
    /// Frames where the switch fired.
    pub switches: Vec<usize>,
    /// Frames where the global candidate replaced the local result.
    pub accepted: Vec<usize>,
}

impl TrackOutput {
    pub fn boxes(&self) -> Vec<BoundingBox> {
        self.results.iter().map(|r| r.0).collect()
    }
}

/// Global re-detection: a template-attention proposal (or grounding when
/// the attention map carries no information, or in NL mode), refined by a
/// local search with the current template.
fn global_search(
    frame: &Frame,
    tracker: &LocalTracker,
    config: &PipelineConfig,
    grounder: Option<&Grounder>,
    sentence: Option<&SentenceEmbedding>,
) -> Result<Option<SearchResult>> {
    let current = tracker.bbox();
    let size = (current.w, current.h);
    let mut proposal = None;
    if config.use_tanet && config.mode != Mode::Nl {
        let map = tanet_attention(frame, tracker.template(), size);
        if !is_uniform(&map) {
            let (cx, cy) = attended_search_box(&map, frame, size).center();
            proposal = Some(BoundingBox::from_center(cx, cy, size.0, size.1));
        }
    }
    if proposal.is_none() {
        if let (Some(g), Some(s)) = (grounder, sentence) {
            let (b, _) = g.ground(frame, s)?;
            let (cx, cy) = b.center();
            proposal = Some(BoundingBox::from_center(cx, cy, size.0, size.1));
        }
    }
    Ok(proposal.map(|p| tracker.search(frame, &p)))
}

fn decide(
    buffer: &HistoryBuffer,
    config: &PipelineConfig,
    switcher: Option<&AdaSwitcher>,
    options: &SwitcherOptions,
) -> Result<Option<SwitchDecision>> {
    if buffer.len() < (config.history / 2).max(1) {
        return Ok(None);
    }
    if config.naive_switch {
        return Ok(Some(naive_decide(buffer, config.naive_threshold)));
    }
    match (config.use_switcher, switcher) {
        (true, Some(sw)) => {
            let probability = sw.params.probability(&buffer.to_input(), options)?;
            Ok(Some(SwitchDecision {
                probability,
                switched: probability > config.switch_threshold,
                threshold: config.switch_threshold,
            }))
        }
        _ => Ok(None),
    }
}

/// Runs one sequence under `config`.
pub fn track_sequence(record: &SequenceRecord, config: &PipelineConfig, models: &Models) -> Result<TrackOutput> {
    record.validate()?;
    models.check(config)?;
    let grounder = models.grounder.as_ref();
    let sentence = match (config.needs_grounder(), grounder) {
        (true, Some(g)) => Some(g.embed(&record.sentence)?),
        _ => None,
    };
    let lang = match (config.mode.uses_language(), &sentence) {
        (true, Some(s)) => s.pooled.clone(),
        _ => vec![0.0; LANG_EMBED_DIM],
    };

    let first = &record.frames[0];
    let mut out = TrackOutput {
        results: Vec::with_capacity(record.len()),
        switches: Vec::new(),
        accepted: Vec::new(),
    };

    if config.ground_every_frame {
        let (g, s) = (grounder.expect("checked"), sentence.as_ref().expect("checked"));
        for frame in &record.frames {
            let (b, scores) = g.ground(frame, s)?;
            out.results.push((b, scores.iter().copied().fold(0.0, f64::max)));
        }
        return Ok(out);
    }

    let init = match config.mode {
        Mode::Nl => g_box(grounder.expect("checked"), first, sentence.as_ref().expect("checked"))?,
        Mode::Bbox | Mode::NlBbox => record.gt[0],
    };
    let mut tracker = LocalTracker::init(first, init)?;
    out.results.push((init, 1.0));

    let options = SwitcherOptions {
        use_frame_attention: config.use_frame_attention,
        ..models.switcher.as_ref().map(|s| s.options.clone()).unwrap_or_default()
    };
    let mut buffer = HistoryBuffer::new(config.history);
    for (t, frame) in record.frames.iter().enumerate().skip(1) {
        let mut obs = tracker.track(frame);
        obs.lang_embedding.copy_from_slice(&lang);
        let mut result = (obs.bbox, obs.confidence);
        let local_confidence = obs.confidence;
        buffer.push(obs);
        if let Some(d) = decide(&buffer, config, models.switcher.as_ref(), &options)? {
            if d.switched {
                out.switches.push(t);
                if let Some(cand) = global_search(frame, &tracker, config, grounder, sentence.as_ref())? {
                    if cand.confidence > local_confidence {
                        debug!("{}: frame {t} re-detected at {:?}", record.name, cand.bbox);
                        tracker.relocate(cand.bbox);
                        result = (cand.bbox, cand.confidence);
                        out.accepted.push(t);
                        buffer.clear();
                    }
                }
            }
        }
        out.results.push(result);
    }
    Ok(out)
}

/// First-frame grounding; tracking proceeds from the argmax box however
/// low its score.
fn g_box(g: &Grounder, frame: &Frame, s: &SentenceEmbedding) -> Result<BoundingBox> {
    Ok(g.ground(frame, s)?.0)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Tracks every record on a worker pool; output order matches `records`.
pub fn track_all(records: &[SequenceRecord], config: &PipelineConfig, models: &Models) -> Result<Vec<TrackOutput>> {
    models.check(config)?;
    pool(config.workers)?.install(|| {
        records
            .par_iter()
            .map(|r| track_sequence(r, config, models))
            .collect()
    })
}
