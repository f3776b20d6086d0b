//! Parallel versus sequential execution of the per-sentence workloads.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lcdep::analysis::{coverage_report, DepthMeasure};
use lcdep::induction::{constrained_estep, prepare, sample_corpus, TrainConfig};
use lcdep::sbg::{DmvParams, TagSet};
use lcdep::transition::SystemKind;
use lcdep::Exec;

fn corpus() -> (TagSet, Vec<lcdep::DepTree>) {
    let tags = TagSet::new(["A", "B", "C", "D"]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = DmvParams::random(tags.len(), &mut rng);
    let trees = sample_corpus(&p, &tags, 200, 12, &mut rng);
    (tags, trees)
}

fn estep(c: &mut Criterion) {
    let (tags, trees) = corpus();
    let mut ts = tags.clone();
    let mut group = c.benchmark_group("estep");
    for (name, depth) in [("eisner", None), ("lc-d2-c2", Some(2))] {
        let cfg = TrainConfig { depth, relax: 2, ..Default::default() };
        let insts = prepare(&trees, &mut ts, &cfg.constraints);
        let params = DmvParams::uniform(ts.len());
        for exec in [Exec::Sequential, Exec::Parallel] {
            group.bench_with_input(BenchmarkId::new(name, format!("{exec:?}")), &exec, |b, &exec| {
                b.iter(|| black_box(constrained_estep(&insts, &params, &cfg, exec)))
            });
        }
    }
    group.finish();
}

fn coverage(c: &mut Criterion) {
    let (_, trees) = corpus();
    let mut group = c.benchmark_group("coverage");
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| {
                black_box(
                    coverage_report(
                        &trees,
                        SystemKind::LeftCorner,
                        DepthMeasure::DepthRe,
                        &[1, 2, 3, 4],
                        1,
                        None,
                        exec,
                    )
                    .unwrap(),
                )
            })
        });
    }
    group.finish();
}

criterion_group!(benches, estep, coverage);
criterion_main!(benches);
