use std::collections::BTreeSet;

use langtrack_core::eval::*;
use langtrack_core::{Attribute, BoundingBox};
use proptest::prelude::*;

fn boxes() -> impl Strategy<Value = Vec<(BoundingBox, BoundingBox, bool)>> {
    let b = (0.0f64..100.0, 0.0f64..100.0, 1.0f64..40.0, 1.0f64..40.0)
        .prop_map(|(x, y, w, h)| BoundingBox::new(x, y, w, h));
    prop::collection::vec((b.clone(), b, prop::bool::weighted(0.2)), 2..30)
}

fn split(v: &[(BoundingBox, BoundingBox, bool)]) -> (Vec<BoundingBox>, Vec<BoundingBox>, Vec<bool>) {
    let mut absent: Vec<bool> = v.iter().map(|x| x.2).collect();
    absent[1] = false;
    (v.iter().map(|x| x.0).collect(), v.iter().map(|x| x.1).collect(), absent)
}

proptest! {
    #[test]
    fn curves_are_monotone_and_auc_is_the_mean(v in boxes(), skip in any::<bool>()) {
        let (res, gt, absent) = split(&v);
        let cfg = EvalConfig { skip_absent: skip, ..Default::default() };
        let (p, _) = precision_curve(&res, &gt, &absent, &cfg).unwrap();
        prop_assert!(p.values().windows(2).all(|w| w[0] <= w[1]));
        let (n, _) = normalized_precision(&res, &gt, &absent, &cfg).unwrap();
        prop_assert!(n.values().windows(2).all(|w| w[0] <= w[1]));
        let (s, auc) = success_curve(&res, &gt, &absent, &cfg).unwrap();
        prop_assert!(s.values().windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(auc, s.values().iter().sum::<f64>() / s.values().len() as f64);
        prop_assert!((0.0..=1.0).contains(&auc));
    }

    #[test]
    fn self_evaluation_is_perfect(v in boxes()) {
        let (_, gt, absent) = split(&v);
        let cfg = EvalConfig::default();
        prop_assert_eq!(precision_curve(&gt, &gt, &absent, &cfg).unwrap().1, 1.0);
        prop_assert_eq!(success_curve(&gt, &gt, &absent, &cfg).unwrap().1, 100.0 / 101.0);
    }

    #[test]
    fn absent_frames_fail_when_not_skipped(v in boxes()) {
        let (_, gt, absent) = split(&v);
        let cfg = EvalConfig { skip_absent: false, ..Default::default() };
        let (s, _) = success_curve(&gt, &gt, &absent, &cfg).unwrap();
        let kept = absent[1..].len() as f64;
        let present = absent[1..].iter().filter(|a| !**a).count() as f64;
        prop_assert!((s.values()[0] - present / kept).abs() < 1e-12);
    }
}

fn sequence(name: &str, shift: f64, attrs: &[Attribute]) -> SequenceResult {
    let gt: Vec<BoundingBox> = (0..10).map(|i| BoundingBox::new(5.0 * i as f64, 10.0, 20.0, 20.0)).collect();
    SequenceResult {
        name: name.into(),
        results: gt.iter().map(|g| g.translate(shift, 0.0)).collect(),
        absent: vec![false; 10],
        gt,
        attributes: attrs.iter().copied().collect::<BTreeSet<_>>(),
    }
}

fn report() -> EvalReport {
    let cfg = EvalConfig::default();
    let good = vec![sequence("s1", 2.0, &[Attribute::FOC]), sequence("s2", 4.0, &[Attribute::OV])];
    let bad = vec![sequence("s1", 15.0, &[Attribute::FOC]), sequence("s2", 30.0, &[Attribute::OV])];
    EvalReport {
        trackers: vec![
            evaluate_tracker("weak", &bad, &cfg).unwrap(),
            evaluate_tracker("strong", &good, &cfg).unwrap(),
        ],
    }
}

#[test]
fn emission_is_byte_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit_report(&report(), a.path()).unwrap();
    emit_report(&report(), b.path()).unwrap();
    for f in ["curves.csv", "ranking.txt", "precision.svg", "success.svg", "norm_precision.svg", "attributes/FOC.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let csv = std::fs::read_to_string(a.path().join("curves.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("tracker,metric,threshold,value"));
    assert_eq!(csv.lines().count(), 1 + 2 * (51 + 51 + 101));
}

#[test]
fn empty_report_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    emit_report(&EvalReport::default(), dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert_eq!(csv, "tracker,metric,threshold,value\n");
    assert!(!dir.path().join("success.svg").exists());
}

#[test]
fn legends_and_ranking_follow_descending_score() {
    let r = report();
    let svg = success_svg(&r.trackers);
    let strong = svg.find(">strong [").unwrap();
    let weak = svg.find(">weak [").unwrap();
    assert!(strong < weak);
    let table = ranking_table(&r.trackers);
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[1].contains("strong") && lines[2].contains("weak"));
}
