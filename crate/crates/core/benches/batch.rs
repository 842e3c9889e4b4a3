use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use graves_core::exec::{self, Execution};
use graves_core::frontend::extract;
use graves_core::graphio::{PropertyKind, TokenVocabulary};
use graves_core::model::{ModelConfig, ModelParameters};
use graves_core::synthetic::{planted_dataset, planted_program, PSEUDO_VERIFIERS};
use graves_core::trainer::{dataset_loss, rank_instances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn batches(c: &mut Criterion) {
    let vocab = TokenVocabulary::builtin();
    let portfolio = PSEUDO_VERIFIERS.iter().map(|s| s.to_string()).collect();
    let params = ModelParameters::init(ModelConfig::default(), &vocab, portfolio, 0).unwrap();
    let instances: Vec<_> = planted_dataset(64, 0, &vocab)
        .unwrap()
        .into_iter()
        .map(|p| p.instance)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let sources: Vec<String> = (0..64).map(|_| planted_program(&mut rng)).collect();

    let mut group = c.benchmark_group("rank");
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| rank_instances(mode, black_box(&instances), &params).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("loss");
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| dataset_loss(mode, black_box(&instances), &params, 1.0).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("extract");
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| {
                exec::map(mode, black_box(&sources), |src| {
                    extract(src, "bench", PropertyKind::ReachSafety, &vocab, None).unwrap()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, batches);
criterion_main!(benches);
