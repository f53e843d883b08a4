//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use itertools::Itertools;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sada_core::bench::{
    run_experiment, score, ExperimentGrid, ModelKind, RunRow, METHOD_BASELINE, METHOD_SADA,
};
use sada_core::bounds::{
    cut_error_bound, expected_cut_error, merge_counts, merge_precision_condition,
    min_delta_for_recall, ErrorModel, PartitionCounts, SubproblemRates,
};
use sada_core::citest::{CiOracle, ExactOracle, GSquaredTest, PartialCorrelationTest};
use sada_core::graph::{generate_random_dag, ids, Dag, VariableId};
use sada_core::sada::{
    find_causal_cut, merge_results, remove_conflicts, run_sada, split_from_pair, SadaConfig,
};
use sada_core::solvers::OracleSolver;
use sada_core::synth::{generate_discrete, generate_linear_nongaussian, random_cpts};

use common::{
    brute_force_d_separated, mean_se, path_exists, random_edge_set, reference_conflict_removal,
    simulate_accepted_cuts, simulate_merge, walkthrough_dag,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn oracle_recovery() -> Outcome {
    let settings: Vec<(usize, f64)> = [10, 30, 50]
        .into_iter()
        .cartesian_product([0.75, 1.0, 1.25])
        .collect();
    let mut failures = Vec::new();
    for run in 0..100u64 {
        let (n, d) = settings[run as usize % settings.len()];
        let g = generate_random_dag(n, d, run).unwrap();
        let cfg = SadaConfig {
            theta: 10,
            seed: run,
            ..SadaConfig::default()
        };
        let found = run_sada(
            &g.variables(),
            &cfg,
            &OracleSolver::new(&g),
            &ExactOracle::new(&g),
        )
        .unwrap();
        let m = score(&found, &g);
        if m.recall != 1.0 || m.precision != 1.0 {
            failures.push(format!(
                "run {run} (n={n}, d={d}): R={} P={}",
                m.recall, m.precision
            ));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{}/100 runs exact {}",
            100 - failures.len(),
            failures.join("; ")
        ),
    )
}

fn cut_quality() -> Outcome {
    let (n, d) = (60, 1.5);
    let cfg = SadaConfig {
        k: 36,
        ..SadaConfig::default()
    };
    let mut good = 0;
    let mut max_in = 0;
    for seed in 0..200u64 {
        let g = generate_random_dag(n, d, seed).unwrap();
        max_in = max_in.max(g.max_in_degree());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cut = find_causal_cut(&ExactOracle::new(&g), &g.variables(), &cfg, &mut rng).unwrap();
        if cut.is_some_and(|c| c.balance() >= 10) {
            good += 1;
        }
    }
    let frac = good as f64 / 200.0;
    outcome(
        frac >= 0.5 && max_in <= 2,
        format!("balance >= 10 in {good}/200 seeds ({frac:.3}); max in-degree {max_in}"),
    )
}

fn walkthrough_replay() -> Outcome {
    let g = walkthrough_dag();
    let cut = split_from_pair(
        &ExactOracle::new(&g),
        &g.variables(),
        VariableId(0),
        VariableId(1),
        &[],
        3,
    )
    .unwrap();
    let pass = cut.left == ids(&[0, 2, 5])
        && cut.cut_set == ids(&[3, 6, 7])
        && cut.right == ids(&[1, 4, 8]);
    outcome(
        pass,
        format!(
            "V1={{{}}} C={{{}}} V2={{{}}}",
            cut.left.iter().join(","),
            cut.cut_set.iter().join(","),
            cut.right.iter().join(",")
        ),
    )
}

fn worked_numbers() -> Outcome {
    let model = ErrorModel::from_degree(100, 1.25);
    let bound = cut_error_bound(&model).unwrap();
    let margin = min_delta_for_recall(&model).unwrap();
    let counts = PartitionCounts::expected(&model, bound as f64).unwrap();
    let by_delta = merge_precision_condition(
        &ErrorModel {
            delta: 0.08,
            ..model.clone()
        },
        &counts,
    )
    .unwrap();
    let by_gamma = merge_precision_condition(
        &ErrorModel {
            gamma: 0.002,
            ..model.clone()
        },
        &counts,
    )
    .unwrap();
    outcome(
        bound == 3 && (margin - 0.0404).abs() <= 0.0005 && by_delta && by_gamma,
        format!(
            "bound={bound} min_delta={margin:.5} (r={}) accepts delta=0.08: {by_delta}, gamma=0.002: {by_gamma}",
            model.false_rate
        ),
    )
}

fn bounds_vs_simulation() -> Outcome {
    let base = ErrorModel::from_degree(20, 1.25);
    let cut_settings = [
        ErrorModel {
            n1: 4,
            n2: 4,
            nc: 12,
            e: 25.0,
            f: 355.0,
            ..base.clone()
        },
        ErrorModel {
            n: 12,
            n1: 3,
            n2: 5,
            nc: 4,
            e: 20.0,
            f: 112.0,
            beta: 0.2,
            ..base.clone()
        },
        ErrorModel {
            n: 30,
            n1: 3,
            n2: 3,
            nc: 24,
            e: 45.0,
            f: 825.0,
            alpha: 0.1,
            beta: 0.3,
            ..base
        },
    ];
    let mut lines = Vec::new();
    let mut pass = true;
    for (k, m) in cut_settings.iter().enumerate() {
        let draws =
            simulate_accepted_cuts(m.n1, m.n2, m.e, m.f, m.alpha, m.beta, 100_000, k as u64);
        let (mean, se) = mean_se(&draws);
        let want = expected_cut_error(m).unwrap();
        let z = (mean - want) / se;
        pass &= z.abs() <= 3.0;
        lines.push(format!("cut{k} z={z:+.2}"));
    }
    let merge_settings = [
        (
            PartitionCounts {
                e1: 30.0,
                e2: 20.0,
                ec: 5.0,
                f1: 200.0,
                f2: 150.0,
                fc: 40.0,
            },
            SubproblemRates {
                recall1: 0.7,
                recall2: 0.5,
                false1: 0.05,
                false2: 0.1,
            },
        ),
        (
            PartitionCounts {
                e1: 12.0,
                e2: 40.0,
                ec: 9.0,
                f1: 90.0,
                f2: 300.0,
                fc: 20.0,
            },
            SubproblemRates {
                recall1: 0.9,
                recall2: 0.3,
                false1: 0.2,
                false2: 0.01,
            },
        ),
        (
            PartitionCounts {
                e1: 5.0,
                e2: 5.0,
                ec: 15.0,
                f1: 25.0,
                f2: 25.0,
                fc: 75.0,
            },
            SubproblemRates {
                recall1: 0.4,
                recall2: 0.4,
                false1: 0.3,
                false2: 0.3,
            },
        ),
    ];
    for (k, (counts, rates)) in merge_settings.iter().enumerate() {
        let (em, fm) = simulate_merge(counts, rates, 100_000, 100 + k as u64);
        let (want_e, want_f) = merge_counts(counts, rates);
        let (me, se) = mean_se(&em);
        let (mf, sf) = mean_se(&fm);
        let (ze, zf) = ((me - want_e) / se, (mf - want_f) / sf);
        pass &= ze.abs() <= 3.0 && zf.abs() <= 3.0;
        lines.push(format!("merge{k} z=({ze:+.2},{zf:+.2})"));
    }
    outcome(pass, lines.join(" "))
}

fn mean_of(
    rows: &[RunRow],
    method: &str,
    field: impl Fn(&RunRow) -> Option<f64>,
) -> (f64, usize, usize) {
    let picked: Vec<&RunRow> = rows.iter().filter(|r| r.method == method).collect();
    let values: Vec<f64> = picked.iter().filter_map(|r| field(r)).collect();
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    (mean, values.len(), picked.len() - values.len())
}

fn default_grid(model: ModelKind) -> Vec<RunRow> {
    let grid = ExperimentGrid {
        model,
        replicates: 20,
        ..ExperimentGrid::default()
    };
    run_experiment(&grid, &SadaConfig::default(), 2024).unwrap()
}

fn cutting_error(continuous: &[RunRow]) -> Outcome {
    let (mean, ok, failed) = mean_of(continuous, METHOD_SADA, |r| r.cut_error_ratio);
    outcome(
        ok > 0 && mean <= 0.12,
        format!("mean cut_error_ratio {mean:.4} over {ok} runs ({failed} failed)"),
    )
}

fn directional(continuous: &[RunRow], discrete: &[RunRow]) -> Outcome {
    let (sada_f1, a, _) = mean_of(continuous, METHOD_SADA, |r| r.f1);
    let (base_f1, b, _) = mean_of(continuous, METHOD_BASELINE, |r| r.f1);
    let (sada_p, c, _) = mean_of(discrete, METHOD_SADA, |r| r.precision);
    let (base_p, d, _) = mean_of(discrete, METHOD_BASELINE, |r| r.precision);
    outcome(
        a > 0 && b > 0 && c > 0 && d > 0 && sada_f1 > base_f1 && sada_p >= base_p,
        format!(
            "continuous F1 {sada_f1:.4} vs {base_f1:.4} ({a}/{b} runs); discrete precision {sada_p:.4} vs {base_p:.4} ({c}/{d} runs)"
        ),
    )
}

fn property_suites() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    // d-separation against path enumeration, every triple
    let mut triples = 0;
    let mut mismatches = 0;
    for seed in 0..120u64 {
        let n = 2 + seed as usize % 6;
        let g = generate_random_dag(n, 0.5 + (seed % 5) as f64 * 0.5, seed).unwrap();
        for (u, v) in (0..n).tuple_combinations() {
            let rest: Vec<usize> = (0..n).filter(|&w| w != u && w != v).collect();
            for z in rest.into_iter().powerset() {
                triples += 1;
                let fast = g.d_separated(VariableId(u), VariableId(v), &ids(&z));
                mismatches += (fast != brute_force_d_separated(&g, u, v, &z)) as usize;
            }
        }
    }
    pass &= mismatches == 0;
    notes.push(format!("d-sep {triples} triples, {mismatches} mismatches"));

    // size of the statistical tests on independent data
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut fz_false, mut g2_false, mut queries) = (0, 0, 0);
    for ds in 0..50u64 {
        let cont = generate_linear_nongaussian(&Dag::empty(12), 0.5, 500, ds).unwrap();
        let disc = generate_discrete(&Dag::empty(12), 3, 2000, ds).unwrap();
        let fz = PartialCorrelationTest::new(&cont, 0.05).unwrap();
        let g2 = GSquaredTest::new(&disc, 0.05).unwrap();
        for q in 0..20 {
            let picked: Vec<VariableId> = sample(&mut rng, 12, 2 + q % 3)
                .iter()
                .map(VariableId)
                .collect();
            let (u, v, z) = (picked[0], picked[1], &picked[2..]);
            fz_false += !fz.test(u, v, z).unwrap().independent as usize;
            g2_false += !g2.test(u, v, z).unwrap().independent as usize;
            queries += 1;
        }
    }
    let (fz_rate, g2_rate) = (
        fz_false as f64 / queries as f64,
        g2_false as f64 / queries as f64,
    );
    pass &= fz_rate <= 0.08 && g2_rate <= 0.08;
    notes.push(format!(
        "false dependence fisher-z {fz_rate:.3}, G2 {g2_rate:.3} over {queries} queries"
    ));

    // merge invariants on random edge sets
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut bad = 0;
    let cases = 10_000;
    for case in 0..cases as u64 {
        let n = 2 + case as usize % 9;
        let a = random_edge_set(&mut rng, n, 0.3);
        let b = random_edge_set(&mut rng, n, 0.3);
        let kept = remove_conflicts(&a);
        let ordered = kept == reference_conflict_removal(&a)
            && a.iter()
                .all(|e| kept.contains(e.parent, e.child) || path_exists(&kept, e.child, e.parent));
        let truth = generate_random_dag(n, 1.5, case).unwrap();
        let merged = merge_results(&a, &b, &ExactOracle::new(&truth), 3).unwrap();
        let subset = merged
            .pairs()
            .all(|(p, c)| a.contains(p, c) || b.contains(p, c));
        if !(kept.is_acyclic() && ordered && merged.is_acyclic() && subset) {
            bad += 1;
        }
    }
    pass &= bad == 0;
    notes.push(format!("merge {cases} cases, {bad} violations"));

    // generator normalization
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let g = generate_random_dag(30, 1.5, seed).unwrap();
        let data = generate_linear_nongaussian(&g, 0.3, 200, seed).unwrap();
        for col in data.columns() {
            let m = col.len() as f64;
            let mean = col.iter().sum::<f64>() / m;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
            worst = worst.max(mean.abs()).max((var - 1.0).abs());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for cpt in random_cpts(&g, 3, &mut rng) {
            for row in &cpt.rows {
                worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
            }
        }
    }
    pass &= worst <= 1e-9;
    notes.push(format!("normalization error {worst:.1e}"));

    outcome(pass, notes.join("; "))
}

fn report(out: &mut impl Write, index: usize, name: &str, started: Instant, o: &Outcome) {
    writeln!(
        out,
        "criterion {index} {:<28} {} ({:.1}s) {}",
        name,
        if o.pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64(),
        o.detail
    )
    .unwrap();
}

fn main() -> ExitCode {
    let mut out = std::io::stdout().lock();
    let mut all = true;
    let mut check = |out: &mut std::io::StdoutLock,
                     index: usize,
                     name: &str,
                     f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        report(out, index, name, t, &o);
        all &= o.pass;
    };

    check(&mut out, 1, "oracle recovery", &mut oracle_recovery);
    check(&mut out, 2, "cut quality", &mut cut_quality);
    check(&mut out, 3, "walkthrough replay", &mut walkthrough_replay);
    check(&mut out, 4, "worked numbers", &mut worked_numbers);
    check(
        &mut out,
        5,
        "bounds vs simulation",
        &mut bounds_vs_simulation,
    );

    let t = Instant::now();
    let continuous = default_grid(ModelKind::Continuous);
    let discrete = default_grid(ModelKind::Discrete);
    writeln!(
        out,
        "default grid runs took {:.1}s",
        t.elapsed().as_secs_f64()
    )
    .unwrap();
    check(&mut out, 6, "cutting error at m=2n", &mut || {
        cutting_error(&continuous)
    });
    check(&mut out, 7, "directional replication", &mut || {
        directional(&continuous, &discrete)
    });
    check(&mut out, 8, "property suites", &mut property_suites);

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
