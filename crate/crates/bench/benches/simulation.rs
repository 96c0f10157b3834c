use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use colperc_core::{
    fuse, generate_environment, run_episode, DistributionKind, Opinion, ScenarioConfig,
    SimulationState, WeightingKind, WeightingMethod,
};

fn fusion(c: &mut Criterion) {
    let mut g = c.benchmark_group("fuse");
    for kind in WeightingKind::ALL {
        let method = WeightingMethod::new(kind, 0.4).unwrap();
        g.bench_function(kind.name(), |b| {
            b.iter(|| {
                fuse(
                    black_box(&method),
                    black_box(0.37),
                    black_box(Opinion::White),
                )
            })
        });
    }
    g.finish();
}

fn environments(c: &mut Criterion) {
    let mut g = c.benchmark_group("environment");
    for kind in [
        DistributionKind::Uniform,
        DistributionKind::ClusteredMinorityFirst,
    ] {
        g.bench_function(format!("150x150 {}", kind.name()), |b| {
            let mut seed = 0u64;
            b.iter(|| {
                seed += 1;
                generate_environment(150, 150, 0.65, kind, seed).unwrap()
            })
        });
    }
    g.finish();
}

fn stepping(c: &mut Criterion) {
    let config = ScenarioConfig {
        seed: 7,
        ..ScenarioConfig::summative()
    };
    c.bench_function("summative step x10", |b| {
        b.iter_batched(
            || SimulationState::new(config.clone()).unwrap(),
            |mut state| {
                for _ in 0..10 {
                    state.step().unwrap();
                }
                state
            },
            BatchSize::SmallInput,
        )
    });
}

fn episodes(c: &mut Criterion) {
    let mut g = c.benchmark_group("episode");
    g.sample_size(20);
    for (name, base) in [
        ("formative", ScenarioConfig::formative()),
        ("summative", ScenarioConfig::summative()),
    ] {
        g.bench_function(name, |b| {
            let mut seed = 0u64;
            b.iter(|| {
                seed += 1;
                run_episode(&ScenarioConfig {
                    seed,
                    ..base.clone()
                })
                .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, fusion, environments, stepping, episodes);
criterion_main!(benches);
