//! Domain records shared across modules.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, Patch};
use crate::geometry::BoundingBox;

/// The 17 per-sequence challenge attributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Attribute {
    /// Camera motion.
    CM,
    /// Rotation of the target.
    ROT,
    /// Deformation.
    DEF,
    /// Full occlusion.
    FOC,
    /// Illumination variation.
    IV,
    /// Out of view.
    OV,
    /// Partial occlusion.
    POC,
    /// Viewpoint change.
    VC,
    /// Scale variation.
    SV,
    /// Background clutter.
    BC,
    /// Motion blur.
    MB,
    /// Aspect ratio outside `[0.5, 2]`.
    ARC,
    /// Low resolution.
    LR,
    /// Fast motion: displacement larger than the box.
    FM,
    /// Adversarial sample.
    AS,
    /// Thermal crossover: a similar-intensity object crosses the target.
    TC,
    /// Modality switch between colour and thermal.
    MS,
}

impl Attribute {
    pub const ALL: [Attribute; 17] = [
        Attribute::CM,
        Attribute::ROT,
        Attribute::DEF,
        Attribute::FOC,
        Attribute::IV,
        Attribute::OV,
        Attribute::POC,
        Attribute::VC,
        Attribute::SV,
        Attribute::BC,
        Attribute::MB,
        Attribute::ARC,
        Attribute::LR,
        Attribute::FM,
        Attribute::AS,
        Attribute::TC,
        Attribute::MS,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            Attribute::CM => "CM",
            Attribute::ROT => "ROT",
            Attribute::DEF => "DEF",
            Attribute::FOC => "FOC",
            Attribute::IV => "IV",
            Attribute::OV => "OV",
            Attribute::POC => "POC",
            Attribute::VC => "VC",
            Attribute::SV => "SV",
            Attribute::BC => "BC",
            Attribute::MB => "MB",
            Attribute::ARC => "ARC",
            Attribute::LR => "LR",
            Attribute::FM => "FM",
            Attribute::AS => "AS",
            Attribute::TC => "TC",
            Attribute::MS => "MS",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Attribute::ALL
            .iter()
            .copied()
            .find(|a| a.code() == s.trim())
            .ok_or_else(|| Error::Invalid(format!("unknown attribute code {s:?}")))
    }
}

/// An ordered list of lowercase tokens.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LanguageSentence {
    tokens: Vec<String>,
}

impl LanguageSentence {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Invalid("sentence must have at least one token".into()));
        }
        for t in &tokens {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::Invalid(format!("bad token {t:?}")));
            }
        }
        let tokens = tokens.into_iter().map(|t| t.to_lowercase()).collect();
        Ok(Self { tokens })
    }

    /// Splits on whitespace and lowercases.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(text.split_whitespace().map(str::to_owned).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl fmt::Display for LanguageSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

/// One annotated video.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceRecord {
    pub name: String,
    pub frames: Vec<Frame>,
    pub gt: Vec<BoundingBox>,
    pub absent: Vec<bool>,
    pub attributes: BTreeSet<Attribute>,
    pub sentence: LanguageSentence,
}

impl SequenceRecord {
    pub fn validate(&self) -> Result<()> {
        let n = self.frames.len();
        if n == 0 {
            return Err(Error::Invalid(format!("sequence {} has no frames", self.name)));
        }
        if self.gt.len() != n || self.absent.len() != n {
            return Err(Error::Invalid(format!(
                "sequence {}: {} frames, {} boxes, {} absent flags",
                self.name,
                n,
                self.gt.len(),
                self.absent.len()
            )));
        }
        for b in &self.gt {
            b.validate()?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

pub const RESULT_IMAGE_SIDE: usize = 30;
pub const RESULT_IMAGE_LEN: usize = RESULT_IMAGE_SIDE * RESULT_IMAGE_SIDE * 3;
pub const RESPONSE_SIDE: usize = 23;
pub const RESPONSE_LEN: usize = RESPONSE_SIDE * RESPONSE_SIDE;
pub const LANG_EMBED_DIM: usize = 512;
/// Flattened observation record length: 1 + 4 + 2700 + 529 + 512.
pub const OBSERVATION_STRIDE: usize = 1 + 4 + RESULT_IMAGE_LEN + RESPONSE_LEN + LANG_EMBED_DIM;

/// Per-frame output of a local tracker, as consumed by the switcher.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackerObservation {
    pub confidence: f64,
    pub bbox: BoundingBox,
    /// 30x30x3 crop of the predicted box.
    pub result_image: Vec<f64>,
    /// 23x23 response map in `[0, 1]`.
    pub response_map: Vec<f64>,
    pub lang_embedding: Vec<f64>,
}

impl TrackerObservation {
    pub fn zeros() -> Self {
        Self {
            confidence: 0.0,
            bbox: BoundingBox::default(),
            result_image: vec![0.0; RESULT_IMAGE_LEN],
            response_map: vec![0.0; RESPONSE_LEN],
            lang_embedding: vec![0.0; LANG_EMBED_DIM],
        }
    }

    pub fn new(
        confidence: f64,
        bbox: BoundingBox,
        result_image: &Patch,
        response_map: Vec<f64>,
        lang_embedding: Vec<f64>,
    ) -> Result<Self> {
        let obs = Self {
            confidence,
            bbox,
            result_image: result_image.data.clone(),
            response_map,
            lang_embedding,
        };
        obs.validate()?;
        Ok(obs)
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.result_image.len(),
            self.response_map.len(),
            self.lang_embedding.len(),
        ];
        let want = [RESULT_IMAGE_LEN, RESPONSE_LEN, LANG_EMBED_DIM];
        if dims != want {
            return Err(Error::shape("tracker observation", &want, &dims));
        }
        Ok(())
    }

    /// Flattens to `[conf, x1, y1, w, h, image.., map.., lang..]`.
    pub fn to_record(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(OBSERVATION_STRIDE);
        out.push(self.confidence as f32);
        out.extend([self.bbox.x1, self.bbox.y1, self.bbox.w, self.bbox.h].map(|v| v as f32));
        out.extend(self.result_image.iter().map(|&v| v as f32));
        out.extend(self.response_map.iter().map(|&v| v as f32));
        out.extend(self.lang_embedding.iter().map(|&v| v as f32));
        out
    }

    pub fn from_record(rec: &[f32]) -> Result<Self> {
        if rec.len() != OBSERVATION_STRIDE {
            return Err(Error::shape("observation record", &[OBSERVATION_STRIDE], &[rec.len()]));
        }
        let f = |s: &[f32]| s.iter().map(|&v| v as f64).collect::<Vec<_>>();
        let img_end = 5 + RESULT_IMAGE_LEN;
        let map_end = img_end + RESPONSE_LEN;
        Ok(Self {
            confidence: rec[0] as f64,
            bbox: BoundingBox::new(rec[1] as f64, rec[2] as f64, rec[3] as f64, rec[4] as f64),
            result_image: f(&rec[5..img_end]),
            response_map: f(&rec[img_end..map_end]),
            lang_embedding: f(&rec[map_end..]),
        })
    }
}

/// A threshold axis paired with per-threshold fractions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricCurve {
    thresholds: Vec<f64>,
    values: Vec<f64>,
}

impl MetricCurve {
    pub fn new(thresholds: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if thresholds.len() != values.len() {
            return Err(Error::shape("metric curve", &[thresholds.len()], &[values.len()]));
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("curve thresholds must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Invalid("curve values must lie in [0, 1]".into()));
        }
        Ok(Self { thresholds, values })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at the grid point equal to `threshold`, if present.
    pub fn value_at(&self, threshold: f64) -> Option<f64> {
        self.thresholds
            .iter()
            .position(|&t| (t - threshold).abs() < 1e-9)
            .map(|i| self.values[i])
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.values.iter().sum::<f64>() / self.values.len() as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attribute_codes_roundtrip() {
        for a in Attribute::ALL {
            assert_eq!(a.code().parse::<Attribute>().unwrap(), a);
        }
        assert!("XYZ".parse::<Attribute>().is_err());
        assert_eq!(Attribute::ALL.len(), 17);
    }

    #[test]
    fn sentence_rules() {
        let s = LanguageSentence::parse("The Red  square").unwrap();
        assert_eq!(s.tokens(), ["the", "red", "square"]);
        assert!(LanguageSentence::parse("   ").is_err());
        assert!(LanguageSentence::new(vec!["a b".into()]).is_err());
    }

    #[test]
    fn observation_dims() {
        let o = TrackerObservation::zeros();
        assert_eq!(o.to_record().len(), OBSERVATION_STRIDE);
        assert_eq!(OBSERVATION_STRIDE, 1 + 4 + 2700 + 529 + 512);
        let back = TrackerObservation::from_record(&o.to_record()).unwrap();
        assert_eq!(back, o);
    }

    #[test]
    fn curve_invariants() {
        assert!(MetricCurve::new(vec![0.0, 1.0], vec![0.5]).is_err());
        assert!(MetricCurve::new(vec![1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(MetricCurve::new(vec![0.0, 1.0], vec![0.5, 1.5]).is_err());
        let c = MetricCurve::new(vec![0.0, 1.0], vec![0.5, 1.0]).unwrap();
        assert_eq!(c.value_at(1.0), Some(1.0));
        assert_eq!(c.mean(), 0.75);
    }
}
