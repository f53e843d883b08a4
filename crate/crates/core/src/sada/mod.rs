//! The split-and-merge framework: causal cut search, recursive splitting and
//! merging of partial results.

mod cut;
mod merge;

pub use cut::{find_causal_cut, split_from_pair};
pub use merge::{
    merge_results, remove_conflicts, remove_redundancy, MAX_PATHS_PER_EDGE, MAX_PATH_LEN,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::citest::{CiOracle, DEFAULT_ALPHA, DEFAULT_MAX_COND};
use crate::error::{Result, SadaError};
use crate::graph::{CausalCut, VariableId};
use crate::solvers::{CausalSolver, EdgeSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SadaConfig {
    /// Subproblems with at most this many variables go straight to the solver.
    pub theta: usize,
    /// Restarts of the cut search.
    pub k: usize,
    /// Cap on conditioning-set size in separator searches.
    pub max_cond: usize,
    /// CI-test threshold used when building statistical oracles.
    pub alpha_level: f64,
    pub seed: u64,
}

impl Default for SadaConfig {
    fn default() -> Self {
        SadaConfig {
            theta: 10,
            k: 1,
            max_cond: DEFAULT_MAX_COND,
            alpha_level: DEFAULT_ALPHA,
            seed: 0,
        }
    }
}

impl SadaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.theta < 2 {
            return Err(SadaError::InvalidArgument(format!(
                "theta must be at least 2, got {}",
                self.theta
            )));
        }
        if self.k == 0 {
            return Err(SadaError::InvalidArgument("k must be at least 1".into()));
        }
        if !(self.alpha_level > 0.0 && self.alpha_level < 1.0) {
            return Err(SadaError::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha_level
            )));
        }
        Ok(())
    }
}

/// An accepted cut together with the variable set it split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutRecord {
    pub depth: usize,
    pub vars: Vec<VariableId>,
    pub cut: CausalCut,
}

/// One node of the recursion and the edges it returned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubproblemRecord {
    pub depth: usize,
    pub vars: Vec<VariableId>,
    /// True when the node was handed to the basic solver.
    pub leaf: bool,
    pub edges: EdgeSet,
}

/// Output of a traced run. Records are in depth-first order, left branch
/// first, independent of scheduling.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SadaRun {
    pub edges: EdgeSet,
    pub cuts: Vec<CutRecord>,
    pub subproblems: Vec<SubproblemRecord>,
}

/// Learns a structure over `vars` by recursive splitting.
pub fn run_sada<S, O>(
    vars: &[VariableId],
    cfg: &SadaConfig,
    solver: &S,
    oracle: &O,
) -> Result<EdgeSet>
where
    S: CausalSolver + ?Sized,
    O: CiOracle + ?Sized,
{
    run_sada_traced(vars, cfg, solver, oracle).map(|run| run.edges)
}

/// [`run_sada`] that also reports every accepted cut and every subproblem.
pub fn run_sada_traced<S, O>(
    vars: &[VariableId],
    cfg: &SadaConfig,
    solver: &S,
    oracle: &O,
) -> Result<SadaRun>
where
    S: CausalSolver + ?Sized,
    O: CiOracle + ?Sized,
{
    cfg.validate()?;
    let mut vars = vars.to_vec();
    vars.sort_unstable();
    vars.dedup();
    if vars.is_empty() {
        return Err(SadaError::InvalidArgument("variable set is empty".into()));
    }
    recurse(&vars, cfg, cfg.seed, 0, solver, oracle)
}

fn solve_leaf<S, O>(
    vars: &[VariableId],
    cfg: &SadaConfig,
    solver: &S,
    oracle: &O,
) -> Result<EdgeSet>
where
    S: CausalSolver + ?Sized,
    O: CiOracle + ?Sized,
{
    let raw = solver.solve(vars)?;
    if solver.may_emit_cycles() {
        merge_results(&raw, &EdgeSet::new(), oracle, cfg.max_cond)
    } else {
        Ok(raw)
    }
}

fn recurse<S, O>(
    vars: &[VariableId],
    cfg: &SadaConfig,
    seed: u64,
    depth: usize,
    solver: &S,
    oracle: &O,
) -> Result<SadaRun>
where
    S: CausalSolver + ?Sized,
    O: CiOracle + ?Sized,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cut = if vars.len() <= cfg.theta {
        None
    } else {
        find_causal_cut(oracle, vars, cfg, &mut rng)?
    };
    let Some(cut) = cut else {
        let edges = solve_leaf(vars, cfg, solver, oracle)?;
        return Ok(SadaRun {
            subproblems: vec![SubproblemRecord {
                depth,
                vars: vars.to_vec(),
                leaf: true,
                edges: edges.clone(),
            }],
            edges,
            cuts: Vec::new(),
        });
    };

    let (left_seed, right_seed): (u64, u64) = (rng.random(), rng.random());
    let (left_vars, right_vars) = (cut.left_problem(), cut.right_problem());
    let (left, right) = rayon::join(
        || recurse(&left_vars, cfg, left_seed, depth + 1, solver, oracle),
        || recurse(&right_vars, cfg, right_seed, depth + 1, solver, oracle),
    );
    let (left, right) = (left?, right?);
    let edges = merge_results(&left.edges, &right.edges, oracle, cfg.max_cond)?;

    let mut cuts = vec![CutRecord {
        depth,
        vars: vars.to_vec(),
        cut,
    }];
    cuts.extend(left.cuts);
    cuts.extend(right.cuts);
    let mut subproblems = vec![SubproblemRecord {
        depth,
        vars: vars.to_vec(),
        leaf: false,
        edges: edges.clone(),
    }];
    subproblems.extend(left.subproblems);
    subproblems.extend(right.subproblems);
    Ok(SadaRun {
        edges,
        cuts,
        subproblems,
    })
}
