use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use itcsp_bench::*;

fn operators(c: &mut Criterion) {
    let mut g = c.benchmark_group("operators");
    for n in [16, 256] {
        g.bench_with_input(BenchmarkId::new("extchoice_menu", n), &n, |b, &n| {
            b.iter(|| settle(&wide("w", black_box(n))))
        });
        g.bench_with_input(BenchmarkId::new("parallel_sync", n), &n, |b, &n| b.iter(|| run_first(sync_pair(n))));
        g.bench_with_input(BenchmarkId::new("interleave", n), &n, |b, &n| {
            b.iter(|| run_first(interleaved_pair(n)))
        });
        g.bench_with_input(BenchmarkId::new("hidep", n), &n, |b, &n| b.iter(|| settle(&hidden_chain(n))));
        g.bench_with_input(BenchmarkId::new("renamep", n), &n, |b, &n| b.iter(|| run_first(renamed_chain(n))));
    }
    g.finish();
}

fn models(c: &mut Criterion) {
    let mut g = c.benchmark_group("models");
    let patrol = load("patrol");
    let chemical = load("chemical");
    g.bench_function("load_patrol", |b| b.iter(|| load("patrol")));
    g.bench_function("load_chemical", |b| b.iter(|| load("chemical")));
    let sc1 = scenario(&patrol, "patrol-scenario1.txt");
    g.bench_function("patrol_scenario1_42_steps", |b| {
        b.iter(|| animate_scenario(itcsp::semantics::compile(&patrol), &sc1, 42))
    });
    let acd2 = scenario(&chemical, "chemical-acd2-prefix.txt");
    g.bench_function("chemical_acd2_prefix", |b| {
        b.iter(|| animate_scenario(itcsp::semantics::compile(&chemical), &acd2, 6))
    });
    g.finish();
}

criterion_group!(benches, operators, models);
criterion_main!(benches);
