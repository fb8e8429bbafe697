use langtrack_core::ground::{Grounder, GroundingModel, Vocabulary};
use langtrack_core::io::{read_results, write_sequence};
use langtrack_core::pipeline::*;
use langtrack_core::switcher::{AdaSwitcher, SwitcherOptions, SwitcherParams};
use langtrack_core::synth::{generate, occlusion_suite};
use langtrack_core::{Error, SequenceRecord};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn suite(n: usize) -> Vec<SequenceRecord> {
    occlusion_suite(3, n, 40).iter().map(|s| generate(s).unwrap()).collect()
}

fn grounder() -> Grounder {
    let vocab = Vocabulary::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    Grounder {
        model: GroundingModel::xavier(vocab.rows(), &mut rng),
        vocab,
        use_spatial_coords: true,
    }
}

fn switcher() -> AdaSwitcher {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    AdaSwitcher::new(SwitcherParams::xavier(&mut rng), SwitcherOptions::default())
}

#[test]
fn local_only_starts_from_the_first_box_and_never_switches() {
    let r = &suite(1)[0];
    let out = track_sequence(r, &PipelineConfig::default(), &Models::default()).unwrap();
    assert_eq!(out.results.len(), r.len());
    assert_eq!(out.results[0], (r.gt[0], 1.0));
    assert!(out.switches.is_empty() && out.accepted.is_empty());
}

#[test]
fn missing_models_are_config_errors() {
    let r = &suite(1)[0];
    let none = Models::default();
    let nl = PipelineConfig { mode: Mode::Nl, ..Default::default() };
    assert!(matches!(track_sequence(r, &nl, &none), Err(Error::Config(_))));
    let sw = PipelineConfig { use_switcher: true, ..Default::default() };
    assert!(matches!(track_sequence(r, &sw, &none), Err(Error::Config(_))));
    let ground = Variant::GroundOnly.apply(&PipelineConfig::default());
    assert!(matches!(track_sequence(r, &ground, &none), Err(Error::Config(_))));
    let cfg = PipelineConfig {
        switcher_checkpoint: Some("/nonexistent/switcher.ckpt".into()),
        ..Default::default()
    };
    assert!(matches!(Models::load(&cfg), Err(Error::Config(_))));
}

#[test]
fn naive_switch_fires_on_every_low_confidence_frame_and_only_then() {
    let r = &suite(1)[0];
    let cfg = PipelineConfig {
        naive_switch: true,
        naive_threshold: 1.01,
        history: 2,
        ..Default::default()
    };
    let out = track_sequence(r, &cfg, &Models::default()).unwrap();
    assert_eq!(out.switches, (1..r.len()).collect::<Vec<_>>());
    let never = PipelineConfig { naive_threshold: -1.0, ..cfg };
    assert!(track_sequence(r, &never, &Models::default()).unwrap().switches.is_empty());
}

#[test]
fn nl_mode_initialises_from_grounding() {
    let r = &suite(1)[0];
    let models = Models {
        grounder: Some(grounder()),
        switcher: Some(switcher()),
    };
    let g = models.grounder.as_ref().unwrap();
    let expected = g.ground(&r.frames[0], &g.embed(&r.sentence).unwrap()).unwrap().0;
    let cfg = PipelineConfig {
        mode: Mode::Nl,
        use_switcher: true,
        ..Default::default()
    };
    let out = track_sequence(r, &cfg, &models).unwrap();
    assert_eq!(out.results[0].0, expected);
    assert_eq!(out.results.len(), r.len());
    let every = Variant::GroundOnly.apply(&cfg);
    let out = track_sequence(r, &every, &models).unwrap();
    assert_eq!(out.results[0].0, expected);
}

#[test]
fn track_all_matches_sequential_runs() {
    let records = suite(3);
    let cfg = PipelineConfig {
        naive_switch: true,
        workers: 2,
        ..Default::default()
    };
    let all = track_all(&records, &cfg, &Models::default()).unwrap();
    for (r, o) in records.iter().zip(&all) {
        assert_eq!(&track_sequence(r, &cfg, &Models::default()).unwrap(), o);
    }
}

#[test]
fn run_track_writes_one_result_file_per_sequence() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let records = suite(2);
    for r in &records {
        write_sequence(r, &data.path().join(&r.name)).unwrap();
    }
    let cfg = PipelineConfig {
        dataset: Some(data.path().to_path_buf()),
        output: out.path().to_path_buf(),
        ..Default::default()
    };
    let ran = run_track(&cfg, &Models::default()).unwrap();
    assert_eq!(ran.len(), 2);
    for (name, o) in &ran {
        let back = read_results(&out.path().join(format!("{name}.txt"))).unwrap();
        assert_eq!(back.len(), o.results.len());
    }
    assert_eq!(PipelineConfig::read(&out.path().join("config.json")).unwrap(), cfg);
    let report = evaluate_runs(data.path(), &[("local".into(), out.path().to_path_buf())], &cfg.eval).unwrap();
    assert_eq!(report.trackers.len(), 1);
}

#[test]
fn benchmark_skips_rows_without_models_and_writes_a_report() {
    let out = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        output: out.path().to_path_buf(),
        bench: BenchConfig {
            sequences: 2,
            length: 40,
            ..Default::default()
        },
        ..Default::default()
    };
    let outcome = run_full_benchmark(&cfg, &Models::default()).unwrap();
    let names: Vec<&str> = outcome.report.trackers.iter().map(|t| t.name.as_str()).collect();
    assert_eq!(names, ["local-only", "naive"]);
    assert_eq!(outcome.skipped, ["ground-only", "AS", "AS+FA"]);
    for f in ["report/curves.csv", "report/ranking.txt", "config.json", "results/naive"] {
        assert!(out.path().join(f).exists(), "{f}");
    }
}

#[test]
fn too_short_generated_benchmarks_are_rejected() {
    let cfg = PipelineConfig {
        bench: BenchConfig { length: 20, ..Default::default() },
        ..Default::default()
    };
    assert!(matches!(run_full_benchmark(&cfg, &Models::default()), Err(Error::Config(_))));
}
