use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::io::{read_text, write_bytes};
use crate::switcher::{DEFAULT_HISTORY, DEFAULT_THRESHOLD};

/// Inference setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Initialize from the first ground-truth box; language unused.
    Bbox,
    /// Initialize from grounding the sentence in the first frame.
    Nl,
    /// Initialize from the first box and use the sentence for re-detection.
    NlBbox,
}

impl Mode {
    pub fn uses_language(&self) -> bool {
        !matches!(self, Mode::Bbox)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Bbox => "bbox",
            Mode::Nl => "nl",
            Mode::NlBbox => "nl_bbox",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bbox" => Ok(Mode::Bbox),
            "nl" => Ok(Mode::Nl),
            "nl_bbox" => Ok(Mode::NlBbox),
            other => Err(Error::Config(format!("unknown mode {other:?} (bbox, nl, nl_bbox)"))),
        }
    }
}

/// A row of the ablation matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Local tracking only.
    LocalOnly,
    /// Grounding on every frame.
    GroundOnly,
    /// Score-threshold switch.
    Naive,
    /// Learned switch with uniform frame weights.
    As,
    /// Learned switch with frame attention.
    AsFa,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::LocalOnly, Variant::GroundOnly, Variant::Naive, Variant::As, Variant::AsFa];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::LocalOnly => "local-only",
            Variant::GroundOnly => "ground-only",
            Variant::Naive => "naive",
            Variant::As => "AS",
            Variant::AsFa => "AS+FA",
        }
    }

    /// `base` with the toggles of this row.
    pub fn apply(&self, base: &PipelineConfig) -> PipelineConfig {
        let mut c = base.clone();
        c.ground_every_frame = false;
        c.naive_switch = false;
        c.use_switcher = false;
        match self {
            Variant::LocalOnly => {}
            Variant::GroundOnly => c.ground_every_frame = true,
            Variant::Naive => c.naive_switch = true,
            Variant::As => {
                c.use_switcher = true;
                c.use_frame_attention = false;
            }
            Variant::AsFa => {
                c.use_switcher = true;
                c.use_frame_attention = true;
            }
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub sequences: usize,
    pub length: usize,
    pub variants: Vec<Variant>,
    /// Extra learned-switch runs at these thresholds (empty to skip).
    pub threshold_sweep: Vec<f64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sequences: 50,
            length: 80,
            variants: Variant::ALL.to_vec(),
            threshold_sweep: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub switch_threshold: f64,
    /// Confidence below which the naive switch fires.
    pub naive_threshold: f64,
    pub history: usize,
    pub grounding_checkpoint: Option<PathBuf>,
    pub vocabulary: Option<PathBuf>,
    pub switcher_checkpoint: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub output: PathBuf,
    pub seed: u64,
    pub use_switcher: bool,
    pub use_frame_attention: bool,
    pub use_spatial_coords: bool,
    pub use_tanet: bool,
    pub naive_switch: bool,
    /// Replace local tracking with grounding on every frame.
    pub ground_every_frame: bool,
    /// Worker threads; 0 means available parallelism.
    pub workers: usize,
    pub eval: EvalConfig,
    pub bench: BenchConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Bbox,
            switch_threshold: DEFAULT_THRESHOLD,
            naive_threshold: 0.5,
            history: DEFAULT_HISTORY,
            grounding_checkpoint: None,
            vocabulary: None,
            switcher_checkpoint: None,
            dataset: None,
            output: PathBuf::from("out"),
            seed: 0,
            use_switcher: false,
            use_frame_attention: true,
            use_spatial_coords: true,
            use_tanet: true,
            naive_switch: false,
            ground_every_frame: false,
            workers: 0,
            eval: EvalConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn needs_grounder(&self) -> bool {
        self.mode.uses_language() || self.ground_every_frame
    }

    /// Checks toggles for consistency; model availability is checked by
    /// [`Models::check`](super::Models::check).
    pub fn validate(&self) -> Result<()> {
        if self.history == 0 {
            return Err(Error::Config("history must be positive".into()));
        }
        if self.naive_switch && self.use_switcher {
            return Err(Error::Config("naive_switch and use_switcher are mutually exclusive".into()));
        }
        if self.ground_every_frame && (self.use_switcher || self.naive_switch) {
            return Err(Error::Config("ground_every_frame excludes switching".into()));
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_bytes(path, self.to_json().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = PipelineConfig::default();
        let back: PipelineConfig = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
        let partial: PipelineConfig = serde_json::from_str(r#"{"mode": "nl_bbox", "seed": 4}"#).unwrap();
        assert_eq!(partial.mode, Mode::NlBbox);
        assert_eq!(partial.switch_threshold, 0.7);
        assert_eq!(partial.history, 20);
    }

    #[test]
    fn validation_rules() {
        let mut c = PipelineConfig::default();
        assert!(c.validate().is_ok());
        c.naive_switch = true;
        c.use_switcher = true;
        assert!(c.validate().is_err());
        c.naive_switch = false;
        assert!(c.validate().is_ok());
        c.ground_every_frame = true;
        assert!(c.validate().is_err());
        c.use_switcher = false;
        assert!(c.validate().is_ok());
        c.history = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn modes_parse() {
        for m in [Mode::Bbox, Mode::Nl, Mode::NlBbox] {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
        assert!("rgb".parse::<Mode>().is_err());
    }
}
