use std::collections::BTreeMap;

use langtrack_core::io::{encode_png, read_iou_log};
use langtrack_core::synth::*;
use langtrack_core::{Attribute, BoundingBox, LanguageSentence};
use proptest::prelude::*;

fn shape(kind: ShapeKind, color: Color, size: f64, x: f64, y: f64) -> ShapeSpec {
    ShapeSpec {
        kind,
        color,
        size,
        aspect: 1.0,
        trajectory: Trajectory::fixed(x, y),
        texture: 7,
    }
}

fn words(s: &LanguageSentence) -> String {
    s.tokens().join(" ")
}

#[test]
fn static_scene_has_constant_gt() {
    let spec = SceneSpec::still(3, (96, 80), 12, shape(ShapeKind::Square, Color::Red, 20.0, 40.0, 30.0));
    let rec = generate(&spec).unwrap();
    assert_eq!(rec.len(), 12);
    assert!(rec.gt.iter().all(|b| *b == rec.gt[0]));
    assert!(rec.absent.iter().all(|a| !a));
    assert!(rec.attributes.is_empty());
    let b = rec.gt[0];
    assert!((b.x1 - 30.0).abs() < 1e-9 && (b.y1 - 20.0).abs() < 1e-9 && b.w == 20.0 && b.h == 20.0);
}

#[test]
fn full_occluder_marks_frames_absent() {
    let mut spec = SceneSpec::still(5, (128, 128), 30, shape(ShapeKind::Circle, Color::Blue, 18.0, 60.0, 60.0));
    spec.events.push(ChallengeEvent::new(
        Attribute::FOC,
        10,
        20,
        EventParams::Occluder { color: [0.5, 0.5, 0.1], margin: 3.0, fraction: 1.0 },
    ));
    let rec = generate(&spec).unwrap();
    for t in 0..30 {
        assert_eq!(rec.absent[t], (10..=20).contains(&t), "frame {t}");
    }
    assert!(rec.attributes.contains(&Attribute::FOC));
}

#[test]
fn same_seed_gives_identical_png_bytes() {
    let spec = switch_scene(99, 40, Attribute::AS, &[Attribute::BC]);
    let a = generate(&spec).unwrap();
    let b = generate(&spec).unwrap();
    for (fa, fb) in a.frames.iter().zip(&b.frames) {
        assert_eq!(encode_png(fa).unwrap(), encode_png(fb).unwrap());
    }
    assert_eq!(a.gt, b.gt);
    assert_eq!(a.absent, b.absent);
}

#[test]
fn event_outside_range_is_rejected() {
    let mut spec = SceneSpec::still(1, (64, 64), 10, shape(ShapeKind::Square, Color::Red, 10.0, 30.0, 30.0));
    spec.events.push(ChallengeEvent::new(Attribute::OV, 5, 10, EventParams::None));
    assert!(generate(&spec).is_err());
}

#[test]
fn fast_motion_cannot_be_an_event() {
    let mut spec = SceneSpec::still(1, (64, 64), 10, shape(ShapeKind::Square, Color::Red, 10.0, 30.0, 30.0));
    spec.events.push(ChallengeEvent::new(Attribute::FM, 2, 4, EventParams::None));
    let err = generate(&spec).unwrap_err().to_string();
    assert!(err.contains("FM"), "{err}");
}

#[test]
fn thermal_crossover_requires_similar_intensity() {
    let mut spec = SceneSpec::still(1, (64, 64), 10, shape(ShapeKind::Square, Color::White, 10.0, 30.0, 30.0));
    spec.distractors.push(shape(ShapeKind::Square, Color::Black, 10.0, 10.0, 10.0));
    spec.events.push(ChallengeEvent::new(Attribute::TC, 2, 4, EventParams::Crossing { distractor: 0 }));
    assert!(generate(&spec).is_err());
}

#[test]
fn modality_switch_emits_gray_thermal_frames() {
    let mut spec = SceneSpec::still(2, (48, 48), 6, shape(ShapeKind::Square, Color::Red, 12.0, 24.0, 24.0));
    spec.events.push(ChallengeEvent::new(Attribute::MS, 3, 5, EventParams::None));
    let rec = generate(&spec).unwrap();
    assert_eq!(rec.frames[2].modality(), langtrack_core::Modality::Rgb);
    let f = &rec.frames[4];
    assert_eq!(f.modality(), langtrack_core::Modality::Thermal);
    assert!(f.raw().chunks(3).all(|p| p[0] == p[1] && p[1] == p[2]));
}

#[test]
fn describe_examples() {
    let spec = SceneSpec::still(1, (100, 100), 1, shape(ShapeKind::Square, Color::Red, 8.0, 10.0, 10.0));
    assert_eq!(words(&describe(&spec)), "the red square on the left");

    let spec = SceneSpec::still(1, (100, 100), 1, shape(ShapeKind::Square, Color::Red, 8.0, 50.0, 50.0));
    assert_eq!(words(&describe(&spec)), "the red square");

    let mut spec = SceneSpec::still(1, (100, 100), 1, shape(ShapeKind::Circle, Color::Green, 10.0, 50.0, 50.0));
    spec.distractors.push(shape(ShapeKind::Square, Color::Blue, 10.0, 80.0, 52.0));
    assert_eq!(words(&describe(&spec)), "the green circle to the left of the blue square");
}

#[test]
fn vertical_side_word_when_dominant() {
    let spec = SceneSpec::still(1, (100, 100), 1, shape(ShapeKind::Triangle, Color::Yellow, 8.0, 45.0, 90.0));
    assert_eq!(words(&describe(&spec)), "the yellow triangle on the bottom");
}

#[test]
fn sentences_use_closed_vocabulary() {
    for seed in 0..40 {
        let case = grounding_case(seed).unwrap();
        for t in case.sentence.tokens() {
            assert!(VOCABULARY.contains(&t.as_str()), "{t}");
        }
    }
}

#[test]
fn identical_pairs_are_told_apart_by_side() {
    for seed in 0..30 {
        let case = identical_pair_case(seed).unwrap();
        assert!(case.spatial);
        let clause = parse_clause(&case.sentence).unwrap();
        assert!(clause.side.is_some());
        assert_eq!(matching_objects(&case.spec, &case.sentence).unwrap(), vec![0]);
    }
}

fn oracle_fast_motion(gt: &[BoundingBox]) -> bool {
    (1..gt.len()).any(|t| {
        let (ax, ay) = (gt[t - 1].x1 + gt[t - 1].w / 2.0, gt[t - 1].y1 + gt[t - 1].h / 2.0);
        let (bx, by) = (gt[t].x1 + gt[t].w / 2.0, gt[t].y1 + gt[t].h / 2.0);
        (bx - ax).hypot(by - ay) > gt[t - 1].w.max(gt[t - 1].h)
    })
}

#[test]
fn fast_motion_tag_from_jump() {
    let mut target = shape(ShapeKind::Square, Color::Red, 10.0, 20.0, 30.0);
    target.trajectory = Trajectory {
        keys: vec![
            Keyframe { frame: 0, x: 20.0, y: 30.0 },
            Keyframe { frame: 3, x: 20.0, y: 30.0 },
            Keyframe { frame: 4, x: 40.0, y: 30.0 },
        ],
    };
    let rec = generate(&SceneSpec::still(1, (64, 64), 8, target)).unwrap();
    assert!(rec.attributes.contains(&Attribute::FM));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fast_motion_tag_matches_displacement(seed in any::<u64>(), a in 0usize..17) {
        let spec = switch_scene(seed, 40, Attribute::ALL[a], &[]);
        let rec = generate(&spec).unwrap();
        prop_assert_eq!(rec.attributes.contains(&Attribute::FM), oracle_fast_motion(&rec.gt));
    }

    #[test]
    fn absent_implies_occlusion_or_out_of_view(seed in any::<u64>(), ov in any::<bool>()) {
        let attr = if ov { Attribute::OV } else { Attribute::FOC };
        let spec = switch_scene(seed, 60, attr, &[]);
        let rec = generate(&spec).unwrap();
        for t in 0..rec.len() {
            prop_assert!(rec.gt[t].w >= 0.0 && rec.gt[t].h >= 0.0);
            if rec.absent[t] {
                prop_assert!(spec.events.iter().any(|e| e.active(t) && matches!(e.attribute, Attribute::FOC | Attribute::OV)));
            }
        }
    }

    #[test]
    fn generated_sentences_are_unambiguous(seed in any::<u64>(), a in 0usize..17) {
        let spec = switch_scene(seed, 40, Attribute::ALL[a], &[]);
        let sentence = describe(&spec);
        prop_assert_eq!(matching_objects(&spec, &sentence).unwrap(), vec![0]);
    }

    #[test]
    fn grounding_sentences_are_unambiguous(seed in any::<u64>()) {
        let case = grounding_case(seed).unwrap();
        prop_assert_eq!(matching_objects(&case.spec, &case.sentence).unwrap(), vec![0]);
    }

    #[test]
    fn describe_is_pure(seed in any::<u64>()) {
        let spec = switch_scene(seed, 40, Attribute::SV, &[Attribute::TC]);
        prop_assert_eq!(describe(&spec), describe(&spec.clone()));
    }
}

#[test]
fn empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let m = make_switch_corpus(dir.path(), 1, 0, &CorpusOptions::default()).unwrap();
    assert!(m.sequences.is_empty());
    assert_eq!(CorpusManifest::read(dir.path()).unwrap(), m);
}

#[test]
fn short_corpus_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let opts = CorpusOptions { length: MIN_SCENE_LENGTH - 1, ..Default::default() };
    assert!(make_switch_corpus(dir.path(), 1, 2, &opts).is_err());
}

#[test]
fn twin_on_same_side_uses_another_reference() {
    let spec = switch_scene(8441384206464600736, 40, Attribute::TC, &[]);
    let sentence = describe(&spec);
    assert_eq!(matching_objects(&spec, &sentence).unwrap(), vec![0], "{sentence}");
}

#[test]
fn static_scene_tracks_exactly() {
    let spec = SceneSpec::still(8, (128, 128), 15, shape(ShapeKind::Triangle, Color::Green, 22.0, 50.0, 70.0));
    let rec = generate(&spec).unwrap();
    let (obs, ious) = run_local_tracker(&rec, &[0.0; 512]).unwrap();
    assert!(ious.iter().all(|&v| v == 1.0), "{ious:?}");
    assert!(obs.iter().all(|o| o.confidence == 1.0));
}

#[test]
fn occlusion_sequence_loses_the_target() {
    let spec = &occlusion_suite(4, 1, 80)[0];
    assert!(spec.events.iter().any(|e| e.attribute == Attribute::FOC));
    let rec = generate(spec).unwrap();
    let (_, ious) = run_local_tracker(&rec, &[0.0; 512]).unwrap();
    assert!(ious.iter().any(|&v| v < 0.5));
}

#[test]
fn corpus_covers_every_attribute() {
    let dir = tempfile::tempdir().unwrap();
    let n = 40;
    let opts = CorpusOptions { length: 40, ..Default::default() };
    let m = make_switch_corpus(dir.path(), 11, n, &opts).unwrap();
    assert_eq!(m.sequences.len(), n);
    let mut counts: BTreeMap<Attribute, usize> = BTreeMap::new();
    for e in &m.sequences {
        for a in &e.attributes {
            *counts.entry(*a).or_default() += 1;
        }
        let ious = read_iou_log(&dir.path().join(format!("{}.iou", e.name))).unwrap();
        assert_eq!(ious.len(), e.length);
    }
    for a in Attribute::ALL {
        let c = counts.get(&a).copied().unwrap_or(0);
        assert!(c * 20 >= n, "{a} in {c} of {n}");
    }
}

#[test]
fn corpus_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let opts = CorpusOptions { length: 40, ..Default::default() };
    make_switch_corpus(a.path(), 5, 3, &opts).unwrap();
    make_switch_corpus(b.path(), 5, 3, &opts).unwrap();
    for f in ["manifest.json", "seq_00001.obs", "seq_00002.iou"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}
