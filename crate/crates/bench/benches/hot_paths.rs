use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use langtrack_core::ground::{grid_features, Grounder, GroundingModel, Vocabulary};
use langtrack_core::localtrack::LocalTracker;
use langtrack_core::switcher::{HistoryBuffer, SwitcherOptions, SwitcherParams};
use langtrack_core::synth::{generate, occlusion_suite};
use langtrack_core::{iou, BoundingBox};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn geometry(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let pairs: Vec<(BoundingBox, BoundingBox)> = (0..1024)
        .map(|_| {
            let mut b = || BoundingBox::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0), 20.0, 20.0);
            (b(), b())
        })
        .collect();
    c.bench_function("iou_1024", |b| {
        b.iter(|| pairs.iter().map(|(x, y)| iou(black_box(x), black_box(y))).sum::<f64>())
    });
}

fn tracking(c: &mut Criterion) {
    let rec = generate(&occlusion_suite(1, 1, 40)[0]).unwrap();
    c.bench_function("local_track_frame", |b| {
        b.iter_batched(
            || LocalTracker::init(&rec.frames[0], rec.gt[0]).unwrap(),
            |mut t| t.track(black_box(&rec.frames[1])),
            criterion::BatchSize::SmallInput,
        )
    });

    let mut tracker = LocalTracker::init(&rec.frames[0], rec.gt[0]).unwrap();
    let mut buffer = HistoryBuffer::new(20);
    for f in &rec.frames[1..21] {
        buffer.push(tracker.track(f));
    }
    let input = buffer.to_input();
    let params = SwitcherParams::xavier(&mut ChaCha8Rng::seed_from_u64(1));
    let options = SwitcherOptions::default();
    c.bench_function("switcher_probability", |b| {
        b.iter(|| params.probability(black_box(&input), &options).unwrap())
    });

    let vocab = Vocabulary::standard();
    let g = Grounder {
        model: GroundingModel::xavier(vocab.rows(), &mut ChaCha8Rng::seed_from_u64(2)),
        vocab,
        use_spatial_coords: true,
    };
    let emb = g.embed(&rec.sentence).unwrap();
    c.bench_function("grid_features", |b| b.iter(|| grid_features(black_box(&rec.frames[0]))));
    c.bench_function("ground_frame", |b| b.iter(|| g.ground(black_box(&rec.frames[0]), &emb).unwrap()));
}

criterion_group!(benches, geometry, tracking);
criterion_main!(benches);
