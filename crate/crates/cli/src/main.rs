use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sada_core::bench::{
    cut_error_ratio, run_experiment, score, score_subproblems, summarize, write_rows_csv,
    ExperimentGrid, Metrics, SubproblemScore,
};
use sada_core::bounds::{BoundsReport, ErrorModel};
use sada_core::citest::{CiOracle, ExactOracle, GSquaredTest, PartialCorrelationTest};
use sada_core::graph::{format_edge_list, generate_random_dag, load_dag, save_dag, Dag};
use sada_core::sada::{run_sada_traced, CutRecord, SadaConfig};
use sada_core::solvers::{CausalSolver, DiscreteAnmSolver, LingamSolver, OracleSolver};
use sada_core::synth::{generate_discrete, generate_linear_nongaussian, DataKind, SampleMatrix};

/// Split-and-merge causal structure learning.
#[derive(Parser, Debug)]
#[command(name = "sada", version, about)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random DAG and write it as an edge list.
    GenDag(GenDagArgs),
    /// Sample data from a DAG and write it as CSV.
    GenData(GenDataArgs),
    /// Learn a structure from data.
    Discover(DiscoverArgs),
    /// Evaluate the error-analysis formulas for one model.
    Bounds(BoundsArgs),
    /// Run a simulated-structure experiment sweep.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct GenDagArgs {
    #[arg(long)]
    n: usize,
    /// Average in-degree.
    #[arg(long)]
    degree: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Edge-list output (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenDataArgs {
    /// Edge list of the generating DAG.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    samples: usize,
    /// Noise weight of the linear non-Gaussian model.
    #[arg(long, default_value_t = 0.3)]
    noise_weight: f64,
    /// Sample discrete data with this many states instead of continuous data.
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SolverName {
    /// LiNGAM-style solver with partial-correlation tests (continuous data).
    Lingam,
    /// Discrete additive-noise solver with G² tests (discrete data).
    Anm,
}

#[derive(Args, Debug, Clone)]
struct SadaArgs {
    /// Subproblem size at which splitting stops.
    #[arg(long, default_value_t = 10)]
    theta: usize,
    /// Restarts of the cut search.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Cap on conditioning-set size.
    #[arg(long, default_value_t = 3)]
    max_cond: usize,
    /// CI-test significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    seed: Option<u64>,
}

impl SadaArgs {
    fn config(&self) -> SadaConfig {
        SadaConfig {
            theta: self.theta,
            k: self.k,
            max_cond: self.max_cond,
            alpha_level: self.alpha,
            seed: resolve_seed(self.seed),
        }
    }
}

#[derive(Args, Debug)]
struct DiscoverArgs {
    /// Sample CSV (may be omitted when both oracle flags are set).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SolverName::Lingam)]
    solver: SolverName,
    /// States per variable for the anm solver (inferred when omitted).
    #[arg(long)]
    states: Option<usize>,
    #[command(flatten)]
    sada: SadaArgs,
    /// Edge-list output of the learned graph.
    #[arg(long)]
    out: PathBuf,
    /// JSON report output (stdout when omitted).
    #[arg(long)]
    report: Option<PathBuf>,
    /// True DAG; adds metrics to the report.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Include the cut and subproblem trace in the report.
    #[arg(long)]
    trace: bool,
    /// Test mode: answer CI queries by d-separation in --truth.
    #[arg(long, requires = "truth")]
    oracle_ci: bool,
    /// Test mode: solve subproblems by reading edges off --truth.
    #[arg(long, requires = "truth")]
    oracle_solver: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// JSON model file; overrides the --n/--degree defaults.
    #[arg(long, conflicts_with_all = ["n", "degree"])]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 1.25)]
    degree: f64,
    #[arg(long, value_enum, default_value_t = TableFormat::Json)]
    format: TableFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Grid config (JSON, or TOML by extension); defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    sada: SadaArgs,
    /// Per-run CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Summary JSON output (defaults to --out with a .json extension).
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random();
        eprintln!("seed: {s}");
        s
    })
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_dag(path: &Path) -> Result<Dag> {
    load_dag(path).with_context(|| format!("loading DAG {}", path.display()))
}

fn gen_dag(args: GenDagArgs) -> Result<()> {
    let g = generate_random_dag(args.n, args.degree, resolve_seed(args.seed))?;
    match args.out {
        Some(p) => save_dag(&g, &p)?,
        None => print!("{}", format_edge_list(&g)),
    }
    Ok(())
}

fn gen_data(args: GenDataArgs) -> Result<()> {
    let g = read_dag(&args.truth)?;
    let seed = resolve_seed(args.seed);
    let data = match args.states {
        Some(k) => generate_discrete(&g, k, args.samples, seed)?,
        None => generate_linear_nongaussian(&g, args.noise_weight, args.samples, seed)?,
    };
    data.write_csv(&args.out)?;
    Ok(())
}

#[derive(Serialize)]
struct Trace<'a> {
    cuts: &'a [CutRecord],
    subproblems: Vec<SubproblemScoreOrSize>,
}

/// Subproblem entries are scored when the truth is known.
#[derive(Serialize)]
#[serde(untagged)]
enum SubproblemScoreOrSize {
    Scored(SubproblemScore),
    Size {
        depth: usize,
        size: usize,
        leaf: bool,
        edges: usize,
    },
}

#[derive(Serialize)]
struct DiscoverReport<'a> {
    n: usize,
    samples: Option<usize>,
    solver: &'static str,
    config: &'a SadaConfig,
    edges: usize,
    cuts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<Metrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Trace<'a>>,
}

fn load_data(args: &DiscoverArgs) -> Result<Option<SampleMatrix>> {
    let Some(path) = &args.data else {
        if args.oracle_ci && args.oracle_solver {
            return Ok(None);
        }
        bail!("--data is required unless both --oracle-ci and --oracle-solver are set");
    };
    let kind = match args.solver {
        SolverName::Lingam => None,
        SolverName::Anm => Some(DataKind::Discrete {
            num_states: args.states.unwrap_or(0),
        }),
    };
    let data = SampleMatrix::read_csv(path, kind).with_context(|| {
        format!(
            "reading {} for the {:?} solver",
            path.display(),
            args.solver
        )
    })?;
    if args.solver == SolverName::Lingam && data.num_states().is_some() {
        bail!(
            "{} holds integer-coded discrete data; the lingam solver needs continuous data (use --solver anm)",
            path.display()
        );
    }
    Ok(Some(data))
}

fn discover(args: DiscoverArgs) -> Result<()> {
    let cfg = args.sada.config();
    cfg.validate()?;
    let truth: Option<Dag> = args.truth.as_deref().map(read_dag).transpose()?;
    let data = load_data(&args)?;
    let n = match (&data, &truth) {
        (Some(d), Some(t)) if d.n() != t.n() => {
            bail!(
                "data has {} variables but the true DAG has {}",
                d.n(),
                t.n()
            )
        }
        (Some(d), _) => d.n(),
        (None, Some(t)) => t.n(),
        (None, None) => unreachable!("load_data demands one of them"),
    };

    let oracle: Box<dyn CiOracle + '_> = match (args.oracle_ci, &truth, &data) {
        (true, Some(t), _) => Box::new(ExactOracle::new(t)),
        (_, _, Some(d)) => match args.solver {
            SolverName::Lingam => Box::new(PartialCorrelationTest::new(d, cfg.alpha_level)?),
            SolverName::Anm => Box::new(GSquaredTest::new(d, cfg.alpha_level)?),
        },
        _ => bail!("no CI oracle available"),
    };
    let solver: Box<dyn CausalSolver + '_> = match (args.oracle_solver, &truth, &data) {
        (true, Some(t), _) => Box::new(OracleSolver::new(t)),
        (_, _, Some(d)) => match args.solver {
            SolverName::Lingam => Box::new(LingamSolver::new(d, cfg.alpha_level)?),
            SolverName::Anm => Box::new(DiscreteAnmSolver::new(d, cfg.alpha_level)?),
        },
        _ => bail!("no solver available"),
    };

    let vars: Vec<_> = (0..n).map(sada_core::graph::VariableId).collect();
    let run = run_sada_traced(&vars, &cfg, solver.as_ref(), oracle.as_ref())?;
    save_dag(&run.edges.to_dag(n)?, &args.out)?;

    let metrics = truth.as_ref().map(|t| Metrics {
        cut_error_ratio: cut_error_ratio(&run.cuts, t),
        ..score(&run.edges, t)
    });
    let trace = args.trace.then(|| Trace {
        cuts: &run.cuts,
        subproblems: match &truth {
            Some(t) => score_subproblems(&run, t)
                .into_iter()
                .map(SubproblemScoreOrSize::Scored)
                .collect(),
            None => run
                .subproblems
                .iter()
                .map(|s| SubproblemScoreOrSize::Size {
                    depth: s.depth,
                    size: s.vars.len(),
                    leaf: s.leaf,
                    edges: s.edges.len(),
                })
                .collect(),
        },
    });
    let report = DiscoverReport {
        n,
        samples: data.as_ref().map(SampleMatrix::m),
        solver: match (args.oracle_solver, args.solver) {
            (true, _) => "oracle",
            (false, SolverName::Lingam) => "lingam",
            (false, SolverName::Anm) => "anm",
        },
        config: &cfg,
        edges: run.edges.len(),
        cuts: run.cuts.len(),
        metrics,
        trace,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write_or_print(args.report.as_deref(), &text)
}

/// Flattens a JSON value into `(dotted.key, value)` rows.
fn flatten(prefix: &str, value: &serde_json::Value, out: &mut Vec<(String, String)>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        serde_json::Value::Null => out.push((prefix.to_string(), String::new())),
        serde_json::Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn bounds(args: BoundsArgs) -> Result<()> {
    let model: ErrorModel = match &args.model {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)
            .with_context(|| format!("parsing model {}", p.display()))?,
        None => ErrorModel::from_degree(args.n, args.degree),
    };
    let report = BoundsReport::compute(&model)?;
    let text = match args.format {
        TableFormat::Json => serde_json::to_string_pretty(&report)? + "\n",
        TableFormat::Csv => {
            let mut rows = Vec::new();
            flatten("", &serde_json::to_value(&report)?, &mut rows);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["quantity", "value"])?;
            for (k, v) in rows {
                w.write_record([k, v])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    write_or_print(args.out.as_deref(), &text)
}

fn bench(args: BenchArgs) -> Result<()> {
    let grid = match &args.config {
        Some(p) => {
            ExperimentGrid::load(p).with_context(|| format!("loading grid {}", p.display()))?
        }
        None => ExperimentGrid::default(),
    };
    let cfg = args.sada.config();
    let rows = run_experiment(&grid, &cfg, cfg.seed)?;
    write_rows_csv(&rows, &args.out)?;
    let summary_path = args
        .summary
        .unwrap_or_else(|| args.out.with_extension("json"));
    fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summarize(&rows))? + "\n",
    )?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    eprintln!(
        "{} runs ({} {} grid points x {} replicates x 2 methods), {failed} failed",
        rows.len(),
        grid.points().len(),
        grid.model,
        grid.replicates
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()?;
    }
    match cli.command {
        Command::GenDag(a) => gen_dag(a),
        Command::GenData(a) => gen_data(a),
        Command::Discover(a) => discover(a),
        Command::Bounds(a) => bounds(a),
        Command::Bench(a) => bench(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
