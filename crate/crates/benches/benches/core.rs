use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sada_core::citest::{
    find_separator, CiOracle, ExactOracle, GSquaredTest, PartialCorrelationTest,
};
use sada_core::graph::{generate_random_dag, VariableId};
use sada_core::sada::{find_causal_cut, run_sada, SadaConfig};
use sada_core::solvers::{LingamSolver, OracleSolver};
use sada_core::synth::{generate_discrete, generate_linear_nongaussian};

fn d_separation(c: &mut Criterion) {
    let mut group = c.benchmark_group("d_separated");
    for n in [50, 200] {
        let g = generate_random_dag(n, 1.5, 1).unwrap();
        let z: Vec<VariableId> = (2..6).map(VariableId).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| g.d_separated(VariableId(0), VariableId(n - 1), black_box(&z)))
        });
    }
    group.finish();
}

fn ci_tests(c: &mut Criterion) {
    let g = generate_random_dag(20, 1.25, 2).unwrap();
    let cont = generate_linear_nongaussian(&g, 0.3, 1000, 3).unwrap();
    let disc = generate_discrete(&g, 3, 5000, 3).unwrap();
    let fisher = PartialCorrelationTest::new(&cont, 0.05).unwrap();
    let g2 = GSquaredTest::new(&disc, 0.05).unwrap();
    let z: Vec<VariableId> = (2..5).map(VariableId).collect();
    let mut group = c.benchmark_group("ci_test_z3");
    group.bench_function("fisher_z", |b| {
        b.iter(|| {
            fisher
                .test(VariableId(0), VariableId(10), black_box(&z))
                .unwrap()
        })
    });
    group.bench_function("g_squared", |b| {
        b.iter(|| {
            g2.test(VariableId(0), VariableId(10), black_box(&z))
                .unwrap()
        })
    });
    let pool: Vec<VariableId> = (1..19).map(VariableId).collect();
    group.bench_function("find_separator_exact", |b| {
        let dag = generate_random_dag(20, 1.25, 2).unwrap();
        let o = ExactOracle::new(&dag);
        b.iter(|| find_separator(&o, VariableId(0), VariableId(19), black_box(&pool), 3).unwrap())
    });
    group.finish();
}

fn cut_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("find_causal_cut");
    group.sample_size(10);
    for n in [30, 60] {
        let g = generate_random_dag(n, 1.25, 4).unwrap();
        let o = ExactOracle::new(&g);
        let cfg = SadaConfig {
            k: 5,
            ..SadaConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| {
                let mut rng = ChaCha8Rng::seed_from_u64(5);
                find_causal_cut(&o, &g.variables(), &cfg, &mut rng).unwrap()
            })
        });
    }
    group.finish();
}

fn full_run(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_sada");
    group.sample_size(10);
    let g = generate_random_dag(60, 1.25, 6).unwrap();
    let cfg = SadaConfig::default();
    group.bench_function("oracle_n60", |b| {
        let o = ExactOracle::new(&g);
        let s = OracleSolver::new(&g);
        b.iter(|| run_sada(&g.variables(), &cfg, &s, &o).unwrap())
    });
    let data = generate_linear_nongaussian(&g, 0.3, 300, 7).unwrap();
    group.bench_function("lingam_n60_m300", |b| {
        let o = PartialCorrelationTest::new(&data, cfg.alpha_level).unwrap();
        let s = LingamSolver::new(&data, cfg.alpha_level).unwrap();
        b.iter(|| run_sada(&g.variables(), &cfg, &s, &o).unwrap())
    });
    group.finish();
}

criterion_group!(benches, d_separation, ci_tests, cut_search, full_run);
criterion_main!(benches);
