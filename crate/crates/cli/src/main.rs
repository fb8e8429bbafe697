mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use langtrack_core::pipeline::{Mode, PipelineConfig};

/// Options shared by every subcommand; flags override the config file.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// JSON config; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// bbox, nl or nl_bbox.
    #[arg(long, global = true)]
    mode: Option<Mode>,
    /// Switch probability threshold.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Grounding parameters checkpoint.
    #[arg(long, global = true)]
    grounding: Option<PathBuf>,
    /// Grounding vocabulary file.
    #[arg(long, global = true)]
    vocab: Option<PathBuf>,
    /// Switcher checkpoint.
    #[arg(long, global = true)]
    switcher: Option<PathBuf>,
    #[arg(long, global = true)]
    history: Option<usize>,
    /// Worker threads (0 = available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    use_switcher: bool,
    #[arg(long, global = true)]
    naive_switch: bool,
    #[arg(long, global = true)]
    ground_every_frame: bool,
    #[arg(long, global = true)]
    no_frame_attention: bool,
    #[arg(long, global = true)]
    no_spatial_coords: bool,
    #[arg(long, global = true)]
    no_tanet: bool,
}

impl Common {
    pub fn resolve(&self) -> anyhow::Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::read(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.mode {
            c.mode = v;
        }
        if let Some(v) = self.threshold {
            c.switch_threshold = v;
        }
        if let Some(v) = &self.out {
            c.output = v.clone();
        }
        if let Some(v) = &self.dataset {
            c.dataset = Some(v.clone());
        }
        if let Some(v) = &self.grounding {
            c.grounding_checkpoint = Some(v.clone());
        }
        if let Some(v) = &self.vocab {
            c.vocabulary = Some(v.clone());
        }
        if let Some(v) = &self.switcher {
            c.switcher_checkpoint = Some(v.clone());
        }
        if let Some(v) = self.history {
            c.history = v;
        }
        if let Some(v) = self.workers {
            c.workers = v;
        }
        c.use_switcher |= self.use_switcher;
        c.naive_switch |= self.naive_switch;
        c.ground_every_frame |= self.ground_every_frame;
        c.use_frame_attention &= !self.no_frame_attention;
        c.use_spatial_coords &= !self.no_spatial_coords;
        c.use_tanet &= !self.no_tanet;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a switch-training corpus or a benchmark suite.
    Synth(commands::SynthArgs),
    /// Train the grounding model on generated single-frame cases.
    TrainGround(commands::TrainGroundArgs),
    /// Label observation windows of a switch corpus.
    Harvest(commands::HarvestArgs),
    /// Train the switcher on a harvested corpus.
    TrainSwitch(commands::TrainSwitchArgs),
    /// Track every sequence of a dataset.
    Track,
    /// Score result directories against a dataset.
    Eval(commands::EvalArgs),
    /// Run the ablation matrix and emit the report.
    Bench(commands::BenchArgs),
}

#[derive(Parser, Debug)]
#[command(name = "langtrack", version, about = "Tracking by natural language with adaptive local/global search")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = cli
        .common
        .resolve()
        .and_then(|config| commands::run(cli.command, config));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
