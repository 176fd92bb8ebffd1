use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use imd2_core::chain::{gen_ofdm, imd2_chain, ChainConfig, OfdmConfig};
use imd2_core::model::Objective;
use imd2_core::optim::{gram_system, LossProblem};
use imd2_core::train::{prepare, ModelConfig};

fn objectives() -> Vec<(&'static str, Objective)> {
    let tx = gen_ofdm(&OfdmConfig::default()).unwrap();
    let ds = imd2_chain(&tx, &ChainConfig::default()).unwrap();
    let scale = tx.max_magnitude();
    [
        ("chebyshev", ModelConfig::chebyshev()),
        ("nn", ModelConfig::nn()),
    ]
    .into_iter()
    .map(|(name, cfg)| (name, prepare(&cfg.build(0).unwrap(), &ds, scale).unwrap()))
    .collect()
}

fn eval(c: &mut Criterion) {
    let mut group = c.benchmark_group("objective_eval");
    for (name, obj) in objectives() {
        let theta = vec![0.1; obj.dim()];
        group.bench_with_input(BenchmarkId::new("sequential", name), &theta, |b, t| {
            b.iter(|| obj.eval_sequential(black_box(t)))
        });
        group.bench_with_input(BenchmarkId::new("parallel", name), &theta, |b, t| {
            b.iter(|| obj.eval(black_box(t)))
        });
    }
    group.finish();
}

fn gram(c: &mut Criterion) {
    let (_, obj) = objectives().remove(0);
    c.bench_function("gram_system", |b| {
        b.iter(|| gram_system(black_box(obj.inputs()), obj.target(), 1e-6))
    });
}

criterion_group!(benches, eval, gram);
criterion_main!(benches);
