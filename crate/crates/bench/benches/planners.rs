use std::hint::black_box;

use certipomdp_core::environments::{build_tiger, tiger, TigerParams};
use certipomdp_core::{belief_update, exact_optimal_value, plan, Belief, EnvKind, SolverConfig, SolverKind};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn planners(c: &mut Criterion) {
    let m = build_tiger(&TigerParams { horizon: 5, ..Default::default() }).unwrap();
    let b = Belief::prior(&m);
    let mut g = c.benchmark_group("tiger_h5_1000_iterations");
    for kind in [SolverKind::Pomcp, SolverKind::DbPomcp, SolverKind::RbPomcp, SolverKind::UdbFull] {
        let cfg = SolverConfig::new(kind, 1000, 1);
        g.bench_with_input(BenchmarkId::from_parameter(kind), &cfg, |bench, cfg| {
            bench.iter(|| plan(&m, &b, black_box(cfg)).unwrap())
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact_oracle");
    for env in [EnvKind::Tiger, EnvKind::Baby, EnvKind::LightDark] {
        let m = env.build(Some(4)).unwrap();
        let b = Belief::prior(&m);
        g.bench_function(BenchmarkId::new(env.to_string(), 4), |bench| {
            bench.iter(|| exact_optimal_value(&m, black_box(&b)).unwrap())
        });
    }
    g.finish();
}

fn belief(c: &mut Criterion) {
    let m = EnvKind::LightDark.build(None).unwrap();
    let b = Belief::prior(&m);
    c.bench_function("lightdark_belief_update", |bench| {
        bench.iter(|| belief_update(&m, black_box(&b), 0, 0))
    });
    let t = build_tiger(&TigerParams::default()).unwrap();
    let tb = Belief::prior(&t);
    c.bench_function("tiger_belief_update", |bench| {
        bench.iter(|| belief_update(&t, black_box(&tb), tiger::LISTEN, tiger::HEAR_LEFT))
    });
}

criterion_group!(benches, planners, oracle, belief);
criterion_main!(benches);
