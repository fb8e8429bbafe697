use log::{info, warn};

use super::config::{Mode, PipelineConfig, Variant};
use super::track::{track_all, Models};
use super::{load_dataset, sequence_results, write_run};
use crate::error::{Error, Result};
use crate::eval::{emit_report, evaluate_tracker, EvalReport};
use crate::synth::{generate, occlusion_suite, MIN_SCENE_LENGTH};
use crate::types::SequenceRecord;

#[derive(Clone, Debug)]
pub struct BenchOutcome {
    pub report: EvalReport,
    /// Rows left out because their models were not supplied.
    pub skipped: Vec<String>,
}

fn records(config: &PipelineConfig) -> Result<Vec<SequenceRecord>> {
    match &config.dataset {
        Some(dir) => load_dataset(dir),
        None if config.bench.length < MIN_SCENE_LENGTH => Err(Error::Config(format!(
            "bench length {} below the minimum scene length {MIN_SCENE_LENGTH}",
            config.bench.length
        ))),
        None => occlusion_suite(config.seed, config.bench.sequences, config.bench.length)
            .iter()
            .map(generate)
            .collect(),
    }
}

/// Runs the ablation matrix (and the optional threshold sweep) over the
/// configured dataset, or a generated occlusion suite when none is given.
/// Writes `results/<row>/`, `report/` and `config.json` under
/// `config.output`.
pub fn run_full_benchmark(config: &PipelineConfig, models: &Models) -> Result<BenchOutcome> {
    config.validate()?;
    let records = records(config)?;
    let mut eval = config.eval.clone();
    if config.mode == Mode::Nl {
        eval.skip_first_frame = false;
    }

    let mut rows: Vec<(String, PipelineConfig)> = config
        .bench
        .variants
        .iter()
        .map(|v| (v.name().to_string(), v.apply(config)))
        .collect();
    for &t in &config.bench.threshold_sweep {
        let mut c = Variant::AsFa.apply(config);
        c.switch_threshold = t;
        rows.push((format!("AS+FA@{t}"), c));
    }

    let mut report = EvalReport::default();
    let mut skipped = Vec::new();
    for (name, cfg) in rows {
        if let Err(e) = models.check(&cfg) {
            warn!("skipping {name}: {e}");
            skipped.push(name);
            continue;
        }
        info!("{name}: {} sequences", records.len());
        let outputs = track_all(&records, &cfg, models)?;
        write_run(&config.output.join("results").join(&name), &records, &outputs)?;
        report
            .trackers
            .push(evaluate_tracker(&name, &sequence_results(&records, &outputs), &eval)?);
    }
    emit_report(&report, &config.output.join("report"))?;
    config.write(&config.output.join("config.json"))?;
    Ok(BenchOutcome { report, skipped })
}
