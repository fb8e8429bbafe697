use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use log::info;
use serde::Serialize;

use langtrack_core::ground::{
    evaluate_grounding, train_grounding, Grounder, GroundingEval, GroundingSample, GroundingTrainConfig, Vocabulary,
};
use langtrack_core::io::write_sequence;
use langtrack_core::pipeline::{evaluate_runs, run_full_benchmark, run_track, Models, PipelineConfig, Variant};
use langtrack_core::switcher::{
    accuracy, harvest_clips, train_switcher, AdaSwitcher, EpochStats, SwitcherOptions, SwitcherTrainConfig,
};
use langtrack_core::synth::{generate, grounding_cases, make_switch_corpus, occlusion_suite, CorpusOptions};
use langtrack_core::{eval::emit_report, LanguageSentence};

use super::Command;

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 400)]
    sequences: usize,
    #[arg(long, default_value_t = 80)]
    length: usize,
    /// Write the occlusion benchmark suite (frames and annotations) instead
    /// of a switch-training corpus.
    #[arg(long)]
    suite: bool,
    /// Also write frames and annotations for the switch corpus.
    #[arg(long)]
    frames: bool,
    /// Store grounder sentence embeddings in the observation logs.
    #[arg(long)]
    embed: bool,
}

#[derive(Args, Debug)]
pub struct TrainGroundArgs {
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 200)]
    held_out: usize,
    #[arg(long, default_value_t = 40)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 5)]
    batch: usize,
}

#[derive(Args, Debug)]
pub struct HarvestArgs {
    /// Switch corpus directory (defaults to the dataset path).
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainSwitchArgs {
    /// Switch corpus directory (defaults to the dataset path).
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-5)]
    lr: f64,
    #[arg(long, default_value_t = 1)]
    batch: usize,
    /// Fraction of sequences held out for evaluation.
    #[arg(long, default_value_t = 0.2)]
    held_out: f64,
    /// Cap on training windows.
    #[arg(long)]
    max_train: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// `name=dir` result directory; repeatable.
    #[arg(long = "run", required = true)]
    runs: Vec<String>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    sequences: Option<usize>,
    #[arg(long)]
    length: Option<usize>,
    /// Extra AS+FA thresholds, comma separated.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<f64>,
    /// Matrix rows, comma separated (default: all).
    #[arg(long, value_delimiter = ',')]
    variants: Vec<String>,
}

pub fn run(command: Command, config: PipelineConfig) -> Result<()> {
    match command {
        Command::Synth(a) => synth(&a, &config),
        Command::TrainGround(a) => train_ground(&a, &config),
        Command::Harvest(a) => harvest(&a, &config),
        Command::TrainSwitch(a) => train_switch(&a, &config),
        Command::Track => track(&config),
        Command::Eval(a) => eval(&a, &config),
        Command::Bench(a) => bench(&a, config),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn prepare_output(config: &PipelineConfig) -> Result<()> {
    fs::create_dir_all(&config.output).with_context(|| format!("creating {}", config.output.display()))?;
    config.write(&config.output.join("config.json"))?;
    Ok(())
}

fn grounder(config: &PipelineConfig) -> Result<Grounder> {
    match (&config.grounding_checkpoint, &config.vocabulary) {
        (Some(p), Some(v)) => Ok(Grounder::load(p, v, config.use_spatial_coords)?),
        _ => bail!("a grounding checkpoint and vocabulary are required (--grounding, --vocab)"),
    }
}

fn corpus_dir(explicit: &Option<PathBuf>, config: &PipelineConfig) -> Result<PathBuf> {
    explicit
        .clone()
        .or_else(|| config.dataset.clone())
        .context("no corpus directory given (--corpus or --dataset)")
}

fn synth(a: &SynthArgs, config: &PipelineConfig) -> Result<()> {
    if a.suite {
        let records = occlusion_suite(config.seed, a.sequences, a.length)
            .iter()
            .map(generate)
            .collect::<langtrack_core::Result<Vec<_>>>()?;
        for r in &records {
            write_sequence(r, &config.output.join(&r.name))?;
        }
        prepare_output(config)?;
        info!("wrote {} benchmark sequences to {}", records.len(), config.output.display());
        return Ok(());
    }
    let g = if a.embed { Some(grounder(config)?) } else { None };
    let embed = g.as_ref().map(|g| {
        move |s: &LanguageSentence| g.embed(s).expect("generated sentences are non-empty").pooled
    });
    let options = CorpusOptions {
        length: a.length,
        write_frames: a.frames,
        embed: embed
            .as_ref()
            .map(|f| f as &(dyn Fn(&LanguageSentence) -> Vec<f64> + Sync)),
    };
    let manifest = make_switch_corpus(&config.output, config.seed, a.sequences, &options)?;
    prepare_output(config)?;
    info!("wrote {} corpus sequences to {}", manifest.sequences.len(), config.output.display());
    Ok(())
}

#[derive(Serialize)]
struct GroundReport {
    config: GroundingTrainConfig,
    loss: Vec<f64>,
    held_out_cases: usize,
    iou_hit_rate: f64,
    spatial_cases: usize,
    spatial_rate: f64,
}

fn train_ground(a: &TrainGroundArgs, config: &PipelineConfig) -> Result<()> {
    let vocab = Vocabulary::standard();
    let train = grounding_cases(config.seed, a.samples)?;
    let held = grounding_cases(config.seed.wrapping_add(1), a.held_out)?;
    let samples = train
        .iter()
        .map(|c| GroundingSample::new(&c.frame, &c.sentence, &c.gt, &vocab))
        .collect::<langtrack_core::Result<Vec<_>>>()?;
    let cfg = GroundingTrainConfig {
        epochs: a.epochs,
        learning_rate: a.lr,
        batch_size: a.batch,
        use_spatial_coords: config.use_spatial_coords,
        seed: config.seed,
        ..Default::default()
    };
    let (model, loss) = train_grounding(&samples, vocab.rows(), &cfg)?;
    let g = Grounder {
        vocab,
        model,
        use_spatial_coords: config.use_spatial_coords,
    };
    let e: GroundingEval = evaluate_grounding(&g, &held)?;
    fs::create_dir_all(&config.output)?;
    g.save(&config.output.join("grounding.params"), &config.output.join("grounding.vocab"))?;
    info!(
        "held-out IoU>=0.5 {:.3}, spatial {}/{}",
        e.hit_rate(),
        e.spatial_correct,
        e.spatial_cases
    );
    write_json(
        &config.output.join("grounding_train.json"),
        &GroundReport {
            config: cfg,
            loss,
            held_out_cases: e.cases,
            iou_hit_rate: e.hit_rate(),
            spatial_cases: e.spatial_cases,
            spatial_rate: e.spatial_rate(),
        },
    )?;
    prepare_output(config)
}

fn harvest(a: &HarvestArgs, config: &PipelineConfig) -> Result<()> {
    let dir = corpus_dir(&a.corpus, config)?;
    let ds = harvest_clips(&dir, config.history)?;
    let (healthy, failed) = ds.class_counts();
    println!("{} windows: {healthy} healthy, {failed} failed", ds.len());
    Ok(())
}

#[derive(Serialize)]
struct SwitchReport {
    config: SwitcherTrainConfig,
    train_windows: usize,
    held_out_windows: usize,
    epochs: Vec<EpochStats>,
    held_out_accuracy: Option<f64>,
    held_out_accuracy_uniform_weights: Option<f64>,
}

fn train_switch(a: &TrainSwitchArgs, config: &PipelineConfig) -> Result<()> {
    let dir = corpus_dir(&a.corpus, config)?;
    let ds = harvest_clips(&dir, config.history)?;
    let (train, held) = ds.split(a.held_out, a.max_train);
    let options = SwitcherOptions {
        use_frame_attention: config.use_frame_attention,
        ..Default::default()
    };
    let cfg = SwitcherTrainConfig {
        epochs: a.epochs,
        learning_rate: a.lr,
        batch_size: a.batch,
        seed: config.seed,
        options: options.clone(),
        ..Default::default()
    };
    let (params, epochs) = train_switcher(&train, &cfg)?;
    let (acc, acc_uniform) = if held.is_empty() {
        (None, None)
    } else {
        let uniform = SwitcherOptions {
            use_frame_attention: false,
            ..options.clone()
        };
        (
            Some(accuracy(&params, &held, &options)?),
            Some(accuracy(&params, &held, &uniform)?),
        )
    };
    if let Some(acc) = acc {
        info!("held-out accuracy {acc:.4} on {} windows", held.len());
    }
    fs::create_dir_all(&config.output)?;
    AdaSwitcher::new(params, options).save(&config.output.join("switcher.ckpt"))?;
    write_json(
        &config.output.join("switcher_train.json"),
        &SwitchReport {
            config: cfg,
            train_windows: train.len(),
            held_out_windows: held.len(),
            epochs,
            held_out_accuracy: acc,
            held_out_accuracy_uniform_weights: acc_uniform,
        },
    )?;
    prepare_output(config)
}

fn track(config: &PipelineConfig) -> Result<()> {
    let models = Models::load(config)?;
    let done = run_track(config, &models)?;
    let switches: usize = done.iter().map(|(_, o)| o.accepted.len()).sum();
    info!("tracked {} sequences, {switches} re-detections", done.len());
    Ok(())
}

fn eval(a: &EvalArgs, config: &PipelineConfig) -> Result<()> {
    let dataset = config.dataset.as_ref().context("eval needs --dataset")?;
    let runs = a
        .runs
        .iter()
        .map(|r| {
            r.split_once('=')
                .map(|(n, d)| (n.to_string(), PathBuf::from(d)))
                .with_context(|| format!("--run expects name=dir, got {r:?}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = evaluate_runs(dataset, &runs, &config.eval)?;
    emit_report(&report, &config.output)?;
    print!("{}", langtrack_core::eval::ranking_table(&report.trackers));
    Ok(())
}

fn bench(a: &BenchArgs, mut config: PipelineConfig) -> Result<()> {
    if let Some(n) = a.sequences {
        config.bench.sequences = n;
    }
    if let Some(n) = a.length {
        config.bench.length = n;
    }
    if !a.sweep.is_empty() {
        config.bench.threshold_sweep = a.sweep.clone();
    }
    if !a.variants.is_empty() {
        config.bench.variants = a
            .variants
            .iter()
            .map(|v| {
                Variant::ALL
                    .into_iter()
                    .find(|x| x.name() == v)
                    .with_context(|| format!("unknown variant {v:?}"))
            })
            .collect::<Result<Vec<_>>>()?;
    }
    let models = Models::load(&config)?;
    let outcome = run_full_benchmark(&config, &models)?;
    print!("{}", langtrack_core::eval::ranking_table(&outcome.report.trackers));
    for s in &outcome.skipped {
        log::warn!("{s} skipped: its model was not supplied");
    }
    Ok(())
}
