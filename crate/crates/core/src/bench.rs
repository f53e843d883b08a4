//! Scoring and the simulated-structure experiment harness.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::citest::{GSquaredTest, PartialCorrelationTest};
use crate::error::{Result, SadaError};
use crate::graph::{generate_random_dag, Dag, VariableId};
use crate::sada::{merge_results, run_sada_traced, CutRecord, SadaConfig, SadaRun};
use crate::solvers::{CausalSolver, DiscreteAnmSolver, EdgeSet, LingamSolver};
use crate::synth::{generate_discrete, generate_linear_nongaussian, SampleMatrix};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub cut_error_ratio: f64,
}

/// Directed-edge recall, precision and F1 of `found` against `truth`
/// restricted to `vars`. Empty results have precision 0; a reversed edge is
/// simply wrong.
fn score_on(found: &EdgeSet, truth: &Dag, vars: &[VariableId]) -> Metrics {
    let true_edges = truth.induced_edges(vars);
    let correct = true_edges
        .iter()
        .filter(|(p, c)| found.contains(*p, *c))
        .count() as f64;
    let recall = if true_edges.is_empty() {
        0.0
    } else {
        correct / true_edges.len() as f64
    };
    let precision = if found.is_empty() {
        0.0
    } else {
        correct / found.len() as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Metrics {
        recall,
        precision,
        f1,
        cut_error_ratio: 0.0,
    }
}

/// Scores a learned edge set against the true graph. The cut error ratio is
/// left at 0; see [`cut_error_ratio`].
pub fn score(found: &EdgeSet, truth: &Dag) -> Metrics {
    score_on(found, truth, &truth.variables())
}

/// Fraction of true edges that some accepted cut placed across `V1` and
/// `V2`, where no later subproblem can recover them.
pub fn cut_error_ratio(cuts: &[CutRecord], truth: &Dag) -> f64 {
    if truth.edge_count() == 0 {
        return 0.0;
    }
    let mut lost = BTreeSet::new();
    for rec in cuts {
        let left: BTreeSet<_> = rec.cut.left.iter().copied().collect();
        let right: BTreeSet<_> = rec.cut.right.iter().copied().collect();
        for (p, c) in truth.edges() {
            if (left.contains(&p) && right.contains(&c))
                || (right.contains(&p) && left.contains(&c))
            {
                lost.insert((p, c));
            }
        }
    }
    lost.len() as f64 / truth.edge_count() as f64
}

/// Score of one recursion node against the true edges among its variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubproblemScore {
    pub depth: usize,
    pub size: usize,
    pub leaf: bool,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

pub fn score_subproblems(run: &SadaRun, truth: &Dag) -> Vec<SubproblemScore> {
    run.subproblems
        .iter()
        .map(|rec| {
            let m = score_on(&rec.edges, truth, &rec.vars);
            SubproblemScore {
                depth: rec.depth,
                size: rec.vars.len(),
                leaf: rec.leaf,
                recall: m.recall,
                precision: m.precision,
                f1: m.f1,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Linear non-Gaussian data, partial-correlation tests, LiNGAM solver.
    Continuous,
    /// CPT data, G² tests, discrete additive-noise solver.
    Discrete,
}

impl ModelKind {
    fn label(self) -> &'static str {
        match self {
            ModelKind::Continuous => "continuous",
            ModelKind::Discrete => "discrete",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentGrid {
    pub model: ModelKind,
    pub variable_sizes: Vec<usize>,
    pub sample_sizes: Vec<usize>,
    pub in_degrees: Vec<f64>,
    pub noise_weights: Vec<f64>,
    pub replicates: usize,
    /// States per variable for discrete data.
    pub num_states: usize,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        ExperimentGrid {
            model: ModelKind::Continuous,
            variable_sizes: vec![100],
            sample_sizes: vec![200],
            in_degrees: vec![1.25],
            noise_weights: vec![0.3],
            replicates: 20,
            num_states: 3,
        }
    }
}

/// One parameter combination of a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n: usize,
    pub m: usize,
    pub d: f64,
    pub w: f64,
}

impl ExperimentGrid {
    /// Reads a grid from JSON, or TOML when the extension is `.toml`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let grid: ExperimentGrid = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text)?
        } else {
            serde_json::from_str(&text)?
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("variable_sizes", self.variable_sizes.is_empty()),
            ("sample_sizes", self.sample_sizes.is_empty()),
            ("in_degrees", self.in_degrees.is_empty()),
            ("noise_weights", self.noise_weights.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(SadaError::InvalidArgument(format!(
                "grid list {name} is empty"
            )));
        }
        if self.replicates == 0 {
            return Err(SadaError::InvalidArgument(
                "replicates must be at least 1".into(),
            ));
        }
        if self.model == ModelKind::Discrete && self.num_states < 2 {
            return Err(SadaError::InvalidArgument(
                "num_states must be at least 2".into(),
            ));
        }
        Ok(())
    }

    /// Grid points in a fixed order: n, then m, then d, then w.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &n in &self.variable_sizes {
            for &m in &self.sample_sizes {
                for &d in &self.in_degrees {
                    for &w in &self.noise_weights {
                        out.push(GridPoint { n, m, d, w });
                    }
                }
            }
        }
        out
    }
}

/// One CSV row. Failed runs carry an error tag and no metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub model: ModelKind,
    pub n: usize,
    pub m: usize,
    pub d: f64,
    pub w: f64,
    pub replicate: usize,
    pub method: String,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub cut_error_ratio: Option<f64>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

pub const METHOD_SADA: &str = "sada";
pub const METHOD_BASELINE: &str = "baseline";

/// Seeds for structure, data and cut search of one run, drawn from its own
/// stream so that runs can execute in any order.
fn run_seeds(seed: u64, point: usize, replicate: usize) -> (u64, u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 32) | replicate as u64);
    (rng.random(), rng.random(), rng.random())
}

fn error_tag(e: &SadaError) -> String {
    let kind = match e {
        SadaError::InsufficientSamples { .. } => "insufficient_samples",
        SadaError::SingularConditioning => "singular_conditioning",
        SadaError::UnreliableTest { .. } => "unreliable_test",
        SadaError::RankDeficient { .. } => "rank_deficient",
        _ => "error",
    };
    format!("{kind}: {e}")
}

struct Outcome {
    metrics: std::result::Result<Metrics, String>,
    wall_ms: f64,
}

fn timed(f: impl FnOnce() -> Result<Metrics>) -> Outcome {
    let start = Instant::now();
    let metrics = f().map_err(|e| error_tag(&e));
    Outcome {
        metrics,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn sada_run<S: CausalSolver, O: crate::citest::CiOracle>(
    truth: &Dag,
    cfg: &SadaConfig,
    solver: &S,
    oracle: &O,
) -> Result<Metrics> {
    let run = run_sada_traced(&truth.variables(), cfg, solver, oracle)?;
    Ok(Metrics {
        cut_error_ratio: cut_error_ratio(&run.cuts, truth),
        ..score(&run.edges, truth)
    })
}

fn run_one(
    grid: &ExperimentGrid,
    point: GridPoint,
    cfg: &SadaConfig,
    seeds: (u64, u64, u64),
) -> [Outcome; 2] {
    let failed = |e: SadaError| {
        let tag = error_tag(&e);
        [tag.clone(), tag].map(|t| Outcome {
            metrics: Err(t),
            wall_ms: 0.0,
        })
    };
    let (dag_seed, data_seed, sada_seed) = seeds;
    let truth = match generate_random_dag(point.n, point.d, dag_seed) {
        Ok(g) => g,
        Err(e) => return failed(e),
    };
    let data: Result<SampleMatrix> = match grid.model {
        ModelKind::Continuous => generate_linear_nongaussian(&truth, point.w, point.m, data_seed),
        ModelKind::Discrete => generate_discrete(&truth, grid.num_states, point.m, data_seed),
    };
    let data = match data {
        Ok(d) => d,
        Err(e) => return failed(e),
    };
    let cfg = SadaConfig {
        seed: sada_seed,
        ..cfg.clone()
    };
    let vars = truth.variables();
    match grid.model {
        ModelKind::Continuous => {
            let setup = PartialCorrelationTest::new(&data, cfg.alpha_level)
                .and_then(|o| Ok((o, LingamSolver::new(&data, cfg.alpha_level)?)));
            let (oracle, solver) = match setup {
                Ok(s) => s,
                Err(e) => return failed(e),
            };
            [
                timed(|| sada_run(&truth, &cfg, &solver, &oracle)),
                timed(|| Ok(score(&solver.solve(&vars)?, &truth))),
            ]
        }
        ModelKind::Discrete => {
            let setup = GSquaredTest::new(&data, cfg.alpha_level)
                .and_then(|o| Ok((o, DiscreteAnmSolver::new(&data, cfg.alpha_level)?)));
            let (oracle, solver) = match setup {
                Ok(s) => s,
                Err(e) => return failed(e),
            };
            [
                timed(|| sada_run(&truth, &cfg, &solver, &oracle)),
                timed(|| {
                    let raw = solver.solve(&vars)?;
                    let cleaned = merge_results(&raw, &EdgeSet::new(), &oracle, cfg.max_cond)?;
                    Ok(score(&cleaned, &truth))
                }),
            ]
        }
    }
}

/// Runs SADA and the whole-problem baseline on every grid point and
/// replicate. Rows come back in grid order (point, replicate, SADA first)
/// and depend only on `seed`, not on scheduling; per-run failures become
/// rows with an error tag.
pub fn run_experiment(grid: &ExperimentGrid, cfg: &SadaConfig, seed: u64) -> Result<Vec<RunRow>> {
    grid.validate()?;
    cfg.validate()?;
    let points = grid.points();
    let tasks: Vec<(usize, GridPoint, usize)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, &p)| (0..grid.replicates).map(move |r| (i, p, r)))
        .collect();
    let rows = tasks
        .par_iter()
        .map(|&(i, point, replicate)| {
            let outcomes = run_one(grid, point, cfg, run_seeds(seed, i, replicate));
            [METHOD_SADA, METHOD_BASELINE]
                .into_iter()
                .zip(outcomes)
                .map(|(method, out)| {
                    let (metrics, error) = match out.metrics {
                        Ok(m) => (Some(m), None),
                        Err(tag) => (None, Some(tag)),
                    };
                    RunRow {
                        model: grid.model,
                        n: point.n,
                        m: point.m,
                        d: point.d,
                        w: point.w,
                        replicate,
                        method: method.to_string(),
                        recall: metrics.map(|m| m.recall),
                        precision: metrics.map(|m| m.precision),
                        f1: metrics.map(|m| m.f1),
                        cut_error_ratio: metrics.map(|m| m.cut_error_ratio),
                        wall_ms: out.wall_ms,
                        error,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_rows_csv(rows: &[RunRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation; `None` without values.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(MeanStd { mean, std })
    }
}

/// Aggregates of one method at one grid point over its successful runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: ModelKind,
    pub n: usize,
    pub m: usize,
    pub d: f64,
    pub w: f64,
    pub method: String,
    pub runs: usize,
    pub failures: usize,
    pub recall: Option<MeanStd>,
    pub precision: Option<MeanStd>,
    pub f1: Option<MeanStd>,
    pub cut_error_ratio: Option<MeanStd>,
    pub wall_ms: Option<MeanStd>,
}

pub fn summarize(rows: &[RunRow]) -> Vec<SummaryRow> {
    // keyed on the grid order of first appearance
    let mut groups: BTreeMap<usize, Vec<&RunRow>> = BTreeMap::new();
    let mut keys: Vec<(ModelKind, usize, usize, u64, u64, &str)> = Vec::new();
    for row in rows {
        let key = (
            row.model,
            row.n,
            row.m,
            row.d.to_bits(),
            row.w.to_bits(),
            row.method.as_str(),
        );
        let slot = match keys.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                keys.push(key);
                keys.len() - 1
            }
        };
        groups.entry(slot).or_default().push(row);
    }
    groups
        .into_values()
        .map(|group| {
            let ok: Vec<&&RunRow> = group.iter().filter(|r| r.error.is_none()).collect();
            let stat = |f: &dyn Fn(&RunRow) -> Option<f64>| {
                MeanStd::of(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            let first = group[0];
            SummaryRow {
                model: first.model,
                n: first.n,
                m: first.m,
                d: first.d,
                w: first.w,
                method: first.method.clone(),
                runs: group.len(),
                failures: group.len() - ok.len(),
                recall: stat(&|r| r.recall),
                precision: stat(&|r| r.precision),
                f1: stat(&|r| r.f1),
                cut_error_ratio: stat(&|r| r.cut_error_ratio),
                wall_ms: stat(&|r| Some(r.wall_ms)),
            }
        })
        .collect()
}

pub fn write_summary_json(rows: &[RunRow], path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&summarize(rows))?;
    fs::write(path, text)?;
    Ok(())
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}
