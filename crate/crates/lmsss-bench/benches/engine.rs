//! Benchmarks of the hot paths: leave-one-out evaluation, MIC scoring, the
//! Pareto machinery and short evolutionary runs on full versus shrunk
//! search spaces.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lmsss::classifier::{loocv_eval, ClassifierConfig};
use lmsss::dataset::{generate_synthetic, stratified_split, Dataset};
use lmsss::ea::{run_ea, CrossoverOp, EAConfig, InitScheme};
use lmsss::mask::FeatureMask;
use lmsss::mic::{mic_with_label, rank_by_mic, MicConfig};
use lmsss::moo::{hypervolume_2d, non_dominated_sort, ObjectiveVector};

fn training_split(features: usize) -> Dataset {
    let (data, _) = generate_synthetic(200, features, 10, 7).unwrap();
    let mut split = stratified_split(&data, 0.7, 1).unwrap();
    split.normalize();
    split.train
}

fn bench_loocv(c: &mut Criterion) {
    let train = training_split(500);
    let mut group = c.benchmark_group("loocv_eval");
    for selected in [10usize, 50, 250] {
        let mask = FeatureMask::from_indices(500, &(0..selected).collect::<Vec<_>>()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(selected), &mask, |b, mask| {
            b.iter(|| loocv_eval(&train, mask, &ClassifierConfig::default()).unwrap());
        });
    }
    group.finish();
}

fn bench_mic(c: &mut Criterion) {
    let train = training_split(500);
    let column = train.column(3);
    c.bench_function("mic_with_label_n140", |b| {
        b.iter(|| mic_with_label(&column, train.labels(), 2, &MicConfig::default()).unwrap());
    });

    let small = training_split(64);
    c.bench_function("rank_by_mic_64_columns", |b| {
        b.iter(|| rank_by_mic(&small, &MicConfig::default()).unwrap());
    });
}

fn bench_pareto(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let points: Vec<ObjectiveVector> = (0..300)
        .map(|_| ObjectiveVector::new(rng.random(), rng.random()))
        .collect();
    c.bench_function("non_dominated_sort_300", |b| {
        b.iter(|| non_dominated_sort(&points));
    });
    let reference = ObjectiveVector::new(1.0, 1.0);
    c.bench_function("hypervolume_2d_300", |b| {
        b.iter(|| hypervolume_2d(&points, &reference));
    });
}

fn bench_generations(c: &mut Criterion) {
    let full = training_split(500);
    let shrunk = full.project_columns(&(0..200).collect::<Vec<_>>()).unwrap();
    let cfg = |seed: u64| EAConfig {
        pop_size: 20,
        generations: 2,
        crossover: CrossoverOp::Uniform { rate: 0.5 },
        revival: false,
        init: InitScheme::SizeUniform,
        seed,
        ..EAConfig::default()
    };
    let mut group = c.benchmark_group("run_ea_2_generations");
    group.sample_size(10);
    group.bench_function("full_500", |b| b.iter(|| run_ea(&full, &cfg(1)).unwrap()));
    group.bench_function("shrunk_200", |b| b.iter(|| run_ea(&shrunk, &cfg(1)).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_loocv, bench_mic, bench_pareto, bench_generations);
criterion_main!(benches);
