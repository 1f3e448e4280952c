use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use plastiflow::analysis::two_flow_oracle;
use plastiflow::topology::{build_scale_free_topology, build_uniform_topology};
use plastiflow::{CongestionModel, RuleKind, UpdateRule};
use plastiflow_bench::framework_engine;

fn engine_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("engine");
    for (kind, ki, kd) in [(RuleKind::Aimd, 1.0, 0.5), (RuleKind::Aisd, 1.0, 5.0), (RuleKind::Mimd, 1.1, 0.5)] {
        let rule = UpdateRule::new(kind, ki, kd).unwrap();
        group.bench_function(format!("{kind}/100_steps_n100"), |b| {
            b.iter_batched(
                || framework_engine(100, 100, rule, CongestionModel::Drop, 1),
                |mut engine| {
                    for _ in 0..100 {
                        engine.step();
                    }
                    engine
                },
                BatchSize::LargeInput,
            )
        });
    }
    let rule = UpdateRule::new(RuleKind::Aimd, 1.0, 0.5).unwrap();
    group.bench_function("aimd/full_run_n100_c100", |b| {
        b.iter_batched(
            || framework_engine(100, 100, rule, CongestionModel::Drop, 2),
            |mut engine| engine.run(1_000_000),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

fn topology(c: &mut Criterion) {
    c.bench_function("topology/uniform_n1000_d6", |b| b.iter(|| build_uniform_topology(1000, 6, 1000, 1000, 3).unwrap()));
    c.bench_function("topology/scale_free_n1000_m3", |b| {
        b.iter(|| build_scale_free_topology(1000, 3, 1000, 1000, 3).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let rule = UpdateRule::new(RuleKind::Aimd, 1.0, 0.5).unwrap();
    c.bench_function("analysis/two_flow_aimd_c1000", |b| b.iter(|| two_flow_oracle(&rule, 1000, 100_000).unwrap()));
}

criterion_group!(benches, engine_steps, topology, oracle);
criterion_main!(benches);
