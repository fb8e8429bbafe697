//! One-pass evaluation: precision, normalized precision and success plots,
//! attribute breakdowns and report emission.

mod report;

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use serde::{Deserialize, Serialize};

pub use report::{emit_report, precision_svg, ranking_table, report_csv, success_svg, norm_precision_svg};

use crate::error::{Error, Result};
use crate::geometry::{center_error, iou, BoundingBox};
use crate::types::{Attribute, MetricCurve};

/// Pixel threshold used to summarize the precision curve.
pub const PRECISION_SUMMARY_PX: f64 = 20.0;

fn grid(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + step * i as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub precision_thresholds: Vec<f64>,
    pub norm_precision_thresholds: Vec<f64>,
    pub success_thresholds: Vec<f64>,
    pub skip_absent: bool,
    /// Leave the initialization frame out of scoring.
    pub skip_first_frame: bool,
    pub attribute_filter: Option<Attribute>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            precision_thresholds: grid(0.0, 1.0, 51),
            norm_precision_thresholds: (0..=50).map(|i| i as f64 / 100.0).collect(),
            success_thresholds: (0..=100).map(|i| i as f64 / 100.0).collect(),
            skip_absent: true,
            skip_first_frame: true,
            attribute_filter: None,
        }
    }
}

/// Per-frame results of one tracker on one sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceResult {
    pub name: String,
    pub results: Vec<BoundingBox>,
    pub gt: Vec<BoundingBox>,
    pub absent: Vec<bool>,
    pub attributes: BTreeSet<Attribute>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: MetricCurve,
    pub precision_at_20: f64,
    pub norm_precision: MetricCurve,
    pub norm_precision_score: f64,
    pub success: MetricCurve,
    pub auc: f64,
    pub frames_used: usize,
    pub frames_skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackerReport {
    pub name: String,
    pub overall: Scores,
    /// Only attributes carried by at least one sequence.
    pub per_attribute: BTreeMap<Attribute, Scores>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub trackers: Vec<TrackerReport>,
}

/// One scored frame. `failed` marks an absent frame kept in scoring.
struct Frame<'a> {
    pred: &'a BoundingBox,
    gt: &'a BoundingBox,
    failed: bool,
}

fn counted<'a>(
    results: &'a [BoundingBox],
    gt: &'a [BoundingBox],
    absent: &[bool],
    config: &EvalConfig,
) -> Result<(Vec<Frame<'a>>, usize)> {
    if results.len() != gt.len() || gt.len() != absent.len() {
        return Err(Error::Invalid(format!(
            "length mismatch: {} results, {} boxes, {} absent flags",
            results.len(),
            gt.len(),
            absent.len()
        )));
    }
    let mut frames = Vec::with_capacity(gt.len());
    let mut skipped = 0;
    for i in 0..gt.len() {
        if (i == 0 && config.skip_first_frame) || (absent[i] && config.skip_absent) {
            skipped += 1;
            continue;
        }
        frames.push(Frame {
            pred: &results[i],
            gt: &gt[i],
            failed: absent[i],
        });
    }
    Ok((frames, skipped))
}

fn fractions(values: &[Option<f64>], thresholds: &[f64], pass: impl Fn(f64, f64) -> bool) -> Result<MetricCurve> {
    if values.is_empty() {
        return Err(Error::Invalid("no frames left to score".into()));
    }
    let n = values.len() as f64;
    let curve = thresholds
        .iter()
        .map(|&t| values.iter().filter(|v| v.is_some_and(|v| pass(v, t))).count() as f64 / n)
        .collect();
    MetricCurve::new(thresholds.to_vec(), curve)
}

fn center_errors(frames: &[Frame<'_>]) -> Vec<Option<f64>> {
    frames
        .iter()
        .map(|f| (!f.failed).then(|| center_error(f.pred, f.gt)))
        .collect()
}

/// Fraction of counted frames with center error `<= tau`, and its value
/// at 20 px.
pub fn precision_curve(
    results: &[BoundingBox],
    gt: &[BoundingBox],
    absent: &[bool],
    config: &EvalConfig,
) -> Result<(MetricCurve, f64)> {
    let (frames, _) = counted(results, gt, absent, config)?;
    precision_from(&center_errors(&frames), config)
}

fn precision_from(errors: &[Option<f64>], config: &EvalConfig) -> Result<(MetricCurve, f64)> {
    let curve = fractions(errors, &config.precision_thresholds, |e, t| e <= t)?;
    let at20 = errors.iter().filter(|e| e.is_some_and(|e| e <= PRECISION_SUMMARY_PX)).count() as f64
        / errors.len() as f64;
    Ok((curve, at20))
}

/// Fraction of counted frames with IoU strictly above `tau`, and the mean
/// of the curve.
pub fn success_curve(
    results: &[BoundingBox],
    gt: &[BoundingBox],
    absent: &[bool],
    config: &EvalConfig,
) -> Result<(MetricCurve, f64)> {
    let (frames, _) = counted(results, gt, absent, config)?;
    success_from(&overlaps(&frames), config)
}

fn overlaps(frames: &[Frame<'_>]) -> Vec<Option<f64>> {
    frames.iter().map(|f| (!f.failed).then(|| iou(f.pred, f.gt))).collect()
}

fn success_from(ious: &[Option<f64>], config: &EvalConfig) -> Result<(MetricCurve, f64)> {
    let curve = fractions(ious, &config.success_thresholds, |v, t| v > t)?;
    let auc = curve.mean();
    Ok((curve, auc))
}

fn normalized_errors(frames: &[Frame<'_>]) -> Vec<Option<f64>> {
    frames
        .iter()
        .filter_map(|f| {
            if f.gt.w <= 0.0 || f.gt.h <= 0.0 {
                warn!("skipping a frame with zero-area ground truth in normalized precision");
                return None;
            }
            if f.failed {
                return Some(None);
            }
            let (px, py) = f.pred.center();
            let (gx, gy) = f.gt.center();
            Some(Some(((px - gx) / f.gt.w).hypot((py - gy) / f.gt.h)))
        })
        .collect()
}

/// Center error normalized by the ground-truth size; the score is the mean
/// of the curve.
pub fn normalized_precision(
    results: &[BoundingBox],
    gt: &[BoundingBox],
    absent: &[bool],
    config: &EvalConfig,
) -> Result<(MetricCurve, f64)> {
    let (frames, _) = counted(results, gt, absent, config)?;
    norm_from(&normalized_errors(&frames), config)
}

fn norm_from(errors: &[Option<f64>], config: &EvalConfig) -> Result<(MetricCurve, f64)> {
    let curve = fractions(errors, &config.norm_precision_thresholds, |e, t| e <= t)?;
    let score = curve.mean();
    Ok((curve, score))
}

/// All three metrics over the concatenated frames of `sequences`.
pub fn score_sequences(sequences: &[&SequenceResult], config: &EvalConfig) -> Result<Scores> {
    let (mut errs, mut ious, mut norms) = (Vec::new(), Vec::new(), Vec::new());
    let mut skipped = 0;
    for s in sequences {
        let (frames, sk) = counted(&s.results, &s.gt, &s.absent, config)?;
        skipped += sk;
        errs.extend(center_errors(&frames));
        ious.extend(overlaps(&frames));
        norms.extend(normalized_errors(&frames));
    }
    let (precision, precision_at_20) = precision_from(&errs, config)?;
    let (success, auc) = success_from(&ious, config)?;
    let (norm_precision, norm_precision_score) = norm_from(&norms, config)?;
    Ok(Scores {
        precision,
        precision_at_20,
        norm_precision,
        norm_precision_score,
        success,
        auc,
        frames_used: errs.len(),
        frames_skipped: skipped,
    })
}

/// Scores per attribute over the sequences tagged with it.
pub fn attribute_report(sequences: &[SequenceResult], config: &EvalConfig) -> Result<BTreeMap<Attribute, Scores>> {
    let mut out = BTreeMap::new();
    for a in Attribute::ALL {
        let tagged: Vec<&SequenceResult> = sequences.iter().filter(|s| s.attributes.contains(&a)).collect();
        if !tagged.is_empty() {
            out.insert(a, score_sequences(&tagged, config)?);
        }
    }
    Ok(out)
}

/// Full report for one tracker. Sequences are scored in name order, and
/// the attribute filter, when set, restricts the overall score.
pub fn evaluate_tracker(name: &str, sequences: &[SequenceResult], config: &EvalConfig) -> Result<TrackerReport> {
    let mut sorted: Vec<&SequenceResult> = sequences
        .iter()
        .filter(|s| config.attribute_filter.is_none_or(|a| s.attributes.contains(&a)))
        .collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let owned: Vec<SequenceResult> = sorted.iter().map(|s| (*s).clone()).collect();
    Ok(TrackerReport {
        name: name.to_string(),
        overall: score_sequences(&sorted, config)?,
        per_attribute: attribute_report(&owned, config)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: f64, y: f64) -> BoundingBox {
        BoundingBox::new(x, y, 10.0, 10.0)
    }

    fn cfg_all_frames() -> EvalConfig {
        EvalConfig {
            skip_first_frame: false,
            ..Default::default()
        }
    }

    #[test]
    fn perfect_trace() {
        let gt: Vec<_> = (0..6).map(|i| b(i as f64, 3.0)).collect();
        let absent = vec![false; 6];
        let cfg = EvalConfig::default();
        let (p, p20) = precision_curve(&gt, &gt, &absent, &cfg).unwrap();
        assert!(p.values().iter().all(|&v| v == 1.0));
        assert_eq!(p20, 1.0);
        let (_, auc) = success_curve(&gt, &gt, &absent, &cfg).unwrap();
        assert_eq!(auc, 100.0 / 101.0);
        let (_, np) = normalized_precision(&gt, &gt, &absent, &cfg).unwrap();
        assert_eq!(np, 1.0);
    }

    #[test]
    fn shifted_by_25px() {
        let gt: Vec<_> = (0..4).map(|_| b(50.0, 50.0)).collect();
        let res: Vec<_> = gt.iter().map(|g| g.translate(25.0, 0.0)).collect();
        let (p, p20) = precision_curve(&res, &gt, &[false; 4], &EvalConfig::default()).unwrap();
        assert_eq!(p20, 0.0);
        assert_eq!(p.value_at(30.0), Some(1.0));
    }

    #[test]
    fn hand_counted_trace() {
        let gt: Vec<_> = (0..5).map(|_| b(50.0, 50.0)).collect();
        let res = vec![
            gt[0],
            gt[1].translate(10.0, 0.0),
            gt[2].translate(21.0, 0.0),
            gt[3].translate(3.0, 4.0),
            gt[4].translate(70.0, 0.0),
        ];
        let absent = [false, false, false, false, true];
        let (_, p20) = precision_curve(&res, &gt, &absent, &cfg_all_frames()).unwrap();
        assert_eq!(p20, 0.75);
        let keep = EvalConfig {
            skip_absent: false,
            ..cfg_all_frames()
        };
        let (_, p20) = precision_curve(&res, &gt, &absent, &keep).unwrap();
        assert_eq!(p20, 0.6);
        let (_, auc) = success_curve(&gt, &gt, &absent, &keep).unwrap();
        assert!((auc - 0.8 * 100.0 / 101.0).abs() < 1e-12);
    }

    #[test]
    fn one_seventh_overlap() {
        let gt = [BoundingBox::new(0.0, 0.0, 4.0, 1.0)];
        let res = [BoundingBox::new(3.0, 0.0, 4.0, 1.0)];
        assert_eq!(iou(&gt[0], &res[0]), 1.0 / 7.0);
        let (c, auc) = success_curve(&res, &gt, &[false], &cfg_all_frames()).unwrap();
        assert_eq!(auc, 15.0 / 101.0);
        assert_eq!(c.value_at(0.14), Some(1.0));
        assert_eq!(c.value_at(0.15), Some(0.0));
    }

    #[test]
    fn zero_overlap_gives_zero_auc() {
        let gt = [b(0.0, 0.0), b(0.0, 0.0)];
        let res = [b(0.0, 0.0), b(40.0, 40.0)];
        let (c, auc) = success_curve(&res, &gt, &[false; 2], &EvalConfig::default()).unwrap();
        assert_eq!(c.value_at(0.0), Some(0.0));
        assert_eq!(auc, 0.0);
    }

    #[test]
    fn normalized_offsets() {
        let gt = [b(0.0, 0.0), BoundingBox::new(10.0, 10.0, 20.0, 10.0)];
        let res = [gt[0], gt[1].translate(20.0, 0.0)];
        let (c, score) = normalized_precision(&res, &gt, &[false; 2], &EvalConfig::default()).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.0));
        assert_eq!(score, 0.0);
        let res = [gt[0], gt[1].translate(2.0, 0.0)];
        let (c, _) = normalized_precision(&res, &gt, &[false; 2], &EvalConfig::default()).unwrap();
        for (t, v) in c.thresholds().iter().zip(c.values()) {
            if *t > 0.1 + 1e-9 {
                assert_eq!(*v, 1.0);
            }
            if *t < 0.1 - 1e-9 {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn no_counted_frames_is_an_error() {
        let gt = [b(0.0, 0.0)];
        assert!(precision_curve(&gt, &gt, &[false], &EvalConfig::default()).is_err());
        assert!(success_curve(&gt, &gt, &[true], &cfg_all_frames()).is_err());
        assert!(precision_curve(&gt, &gt, &[false, false], &cfg_all_frames()).is_err());
    }

    fn seq(name: &str, attrs: &[Attribute], shift: f64) -> SequenceResult {
        let gt: Vec<_> = (0..5).map(|i| b(10.0 * i as f64, 0.0)).collect();
        SequenceResult {
            name: name.into(),
            results: gt.iter().map(|g| g.translate(shift, 0.0)).collect(),
            absent: vec![false; 5],
            gt,
            attributes: attrs.iter().copied().collect(),
        }
    }

    #[test]
    fn attribute_filtering() {
        let seqs = vec![seq("a", &[Attribute::FOC, Attribute::SV], 0.0), seq("b", &[Attribute::SV], 30.0)];
        let cfg = EvalConfig::default();
        let rep = attribute_report(&seqs, &cfg).unwrap();
        assert_eq!(rep.keys().copied().collect::<Vec<_>>(), [Attribute::FOC, Attribute::SV]);
        assert_eq!(rep[&Attribute::FOC].precision_at_20, 1.0);
        assert_eq!(rep[&Attribute::SV].precision_at_20, 0.5);
        let overall = evaluate_tracker("t", &seqs, &cfg).unwrap();
        assert_eq!(overall.overall, rep[&Attribute::SV]);
        assert_eq!(overall.overall.frames_used, 8);
        assert_eq!(overall.overall.frames_skipped, 2);
    }
}
