use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use lacon::arena::{generate_dataset, simulate, ArenaConfig, CommandRules};
use lacon::control::{ControlConfig, ModelAgent};
use lacon::dirichlet::{rsvi_gradient, DirichletParams};
use lacon::model::{evaluate, train, AttentionMode, Hyper, ParameterStore, TrainConfig};
use lacon::numerics::RngStream;
use lacon::par::Exec;

const EXECS: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn model() -> ParameterStore {
    ParameterStore::init(Hyper::default(), &mut RngStream::new(0, 0)).unwrap()
}

fn bench_rsvi(c: &mut Criterion) {
    let p = DirichletParams::with_default_floor(vec![0.4, 1.3, 2.0, 0.9, 3.1]).unwrap();
    let w = [0.5, -1.0, 2.0, 0.3, -0.7];
    let mut g = c.benchmark_group("rsvi_gradient_20k");
    for (name, exec) in EXECS {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                rsvi_gradient(&p, 4, |z| z.iter().zip(&w).map(|(a, b)| a * b).sum(), |_| w.to_vec(), 20_000, &RngStream::new(1, 1), exec)
                    .unwrap()
            })
        });
    }
    g.finish();
}

fn bench_batch_gradients(c: &mut Criterion) {
    let data = generate_dataset(4, 100, &ArenaConfig::default(), 2, Exec::Sequential).unwrap();
    let store = model();
    let mut g = c.benchmark_group("train_epoch");
    g.sample_size(10);
    for (name, exec) in EXECS {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            let cfg = TrainConfig { epochs: 1, ..TrainConfig::default() };
            b.iter(|| train(&data.train, &data.validation, &cfg, store.clone(), None, &RngStream::new(3, 0), exec).unwrap())
        });
    }
    g.finish();
    let mut g = c.benchmark_group("evaluate_stochastic");
    g.sample_size(10);
    for (name, exec) in EXECS {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| evaluate(&data.train, &store, AttentionMode::Stochastic, &RngStream::new(4, 0), exec).unwrap())
        });
    }
    g.finish();
}

fn bench_rollouts(c: &mut Criterion) {
    let agent = ModelAgent::new(model(), AttentionMode::Deterministic);
    let control = ControlConfig { gate: false, ..ControlConfig::default() };
    let mut g = c.benchmark_group("simulate_4_episodes");
    g.sample_size(10);
    for (name, exec) in EXECS {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| simulate(&agent, &ArenaConfig::default(), &control, &CommandRules::default(), 4, 200, 5, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_rsvi, bench_batch_gradients, bench_rollouts);
criterion_main!(benches);
