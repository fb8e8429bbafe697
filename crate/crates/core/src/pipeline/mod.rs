//! Inference settings, sequence-level tracking and benchmark orchestration.

mod bench;
mod config;
mod track;

use std::fs;
use std::path::{Path, PathBuf};

use log::info;

pub use bench::{run_full_benchmark, BenchOutcome};
pub use config::{BenchConfig, Mode, PipelineConfig, Variant};
pub use track::{track_all, track_sequence, Models, TrackOutput};

use crate::error::{Error, Result};
use crate::eval::{evaluate_tracker, EvalConfig, EvalReport, SequenceResult};
use crate::io::{create_dir, read_annotations, read_results, read_sequence, write_results};
use crate::types::SequenceRecord;

/// Sequence directories under `dir` (those holding `groundtruth.txt`),
/// sorted by name.
pub fn sequence_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.join("groundtruth.txt").is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn load_dataset(dir: &Path) -> Result<Vec<SequenceRecord>> {
    let dirs = sequence_dirs(dir)?;
    if dirs.is_empty() {
        return Err(Error::Config(format!("no sequences found under {}", dir.display())));
    }
    dirs.iter().map(|d| read_sequence(d)).collect()
}

/// Writes `<dir>/<name>.txt` for every sequence.
pub fn write_run(dir: &Path, records: &[SequenceRecord], outputs: &[TrackOutput]) -> Result<()> {
    create_dir(dir)?;
    for (r, o) in records.iter().zip(outputs) {
        write_results(&dir.join(format!("{}.txt", r.name)), &o.results)?;
    }
    Ok(())
}

/// Tracks every sequence of `config.dataset` and writes results plus the
/// effective config under `config.output`.
pub fn run_track(config: &PipelineConfig, models: &Models) -> Result<Vec<(String, TrackOutput)>> {
    let dataset = config
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Config("tracking needs a dataset directory".into()))?;
    models.check(config)?;
    let records = load_dataset(dataset)?;
    info!("tracking {} sequences in {} mode", records.len(), config.mode);
    let outputs = track_all(&records, config, models)?;
    write_run(&config.output, &records, &outputs)?;
    config.write(&config.output.join("config.json"))?;
    Ok(records.into_iter().map(|r| r.name).zip(outputs).collect())
}

/// Pairs stored `<results>/<name>.txt` files with the annotations under
/// `dataset`. Every sequence must have a result file.
pub fn load_results(dataset: &Path, results: &Path) -> Result<Vec<SequenceResult>> {
    let mut out = Vec::new();
    for dir in sequence_dirs(dataset)? {
        let name = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let (gt, absent, _, attributes) = read_annotations(&dir)?;
        let boxes: Vec<_> = read_results(&results.join(format!("{name}.txt")))?
            .into_iter()
            .map(|r| r.0)
            .collect();
        out.push(SequenceResult {
            name,
            results: boxes,
            gt,
            absent,
            attributes,
        });
    }
    if out.is_empty() {
        return Err(Error::Config(format!("no sequences found under {}", dataset.display())));
    }
    Ok(out)
}

/// Evaluates named result directories against one dataset.
pub fn evaluate_runs(dataset: &Path, runs: &[(String, PathBuf)], config: &EvalConfig) -> Result<EvalReport> {
    let trackers = runs
        .iter()
        .map(|(name, dir)| evaluate_tracker(name, &load_results(dataset, dir)?, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport { trackers })
}

pub fn sequence_results(records: &[SequenceRecord], outputs: &[TrackOutput]) -> Vec<SequenceResult> {
    records
        .iter()
        .zip(outputs)
        .map(|(r, o)| SequenceResult {
            name: r.name.clone(),
            results: o.boxes(),
            gt: r.gt.clone(),
            absent: r.absent.clone(),
            attributes: r.attributes.clone(),
        })
        .collect()
}
