//! Basic causal solvers: the black boxes the split-and-merge framework runs on
//! each small subproblem.

mod anm;
mod lingam;

pub use anm::DiscreteAnmSolver;
pub use lingam::LingamSolver;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{topological_sort, Dag, VariableId};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub parent: VariableId,
    pub child: VariableId,
    pub significance: f64,
}

/// Directed edges keyed by `(parent, child)`, each with a significance score.
/// Higher significance means more trusted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Edge>", into = "Vec<Edge>")]
pub struct EdgeSet {
    edges: BTreeMap<(VariableId, VariableId), f64>,
}

impl EdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an edge; a duplicate ordered pair keeps the larger significance.
    pub fn insert(&mut self, parent: VariableId, child: VariableId, significance: f64) {
        self.edges
            .entry((parent, child))
            .and_modify(|s| *s = s.max(significance))
            .or_insert(significance);
    }

    pub fn remove(&mut self, parent: VariableId, child: VariableId) -> Option<f64> {
        self.edges.remove(&(parent, child))
    }

    pub fn contains(&self, parent: VariableId, child: VariableId) -> bool {
        self.edges.contains_key(&(parent, child))
    }

    pub fn significance(&self, parent: VariableId, child: VariableId) -> Option<f64> {
        self.edges.get(&(parent, child)).copied()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Edges in ascending `(parent, child)` order.
    pub fn iter(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges
            .iter()
            .map(|(&(parent, child), &significance)| Edge {
                parent,
                child,
                significance,
            })
    }

    pub fn pairs(&self) -> impl Iterator<Item = (VariableId, VariableId)> + '_ {
        self.edges.keys().copied()
    }

    /// Union; shared pairs keep the larger significance.
    pub fn extend_from(&mut self, other: &EdgeSet) {
        for e in other.iter() {
            self.insert(e.parent, e.child, e.significance);
        }
    }

    /// Every variable mentioned by some edge.
    pub fn variables(&self) -> Vec<VariableId> {
        let mut v: Vec<VariableId> = self.pairs().flat_map(|(p, c)| [p, c]).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn is_acyclic(&self) -> bool {
        let n = self.variables().last().map_or(0, |v| v.0 + 1);
        let mut children = vec![Vec::new(); n];
        for (p, c) in self.pairs() {
            children[p.0].push(c.0);
        }
        topological_sort(n, &children).is_ok()
    }

    pub fn to_dag(&self, n: usize) -> Result<Dag> {
        Dag::new(n, self.pairs().map(|(p, c)| (p.0, c.0)))
    }
}

impl From<Vec<Edge>> for EdgeSet {
    fn from(edges: Vec<Edge>) -> Self {
        edges.into_iter().collect()
    }
}

impl From<EdgeSet> for Vec<Edge> {
    fn from(set: EdgeSet) -> Self {
        set.iter().collect()
    }
}

impl FromIterator<Edge> for EdgeSet {
    fn from_iter<I: IntoIterator<Item = Edge>>(iter: I) -> Self {
        let mut set = EdgeSet::new();
        for e in iter {
            set.insert(e.parent, e.child, e.significance);
        }
        set
    }
}

/// A basic causal solver over a subset of the variables of the data it holds.
pub trait CausalSolver: Sync {
    /// Edges among `vars` only.
    fn solve(&self, vars: &[VariableId]) -> Result<EdgeSet>;

    /// Whether the raw output may contain directed cycles that need the
    /// merge cleanup before use.
    fn may_emit_cycles(&self) -> bool {
        false
    }
}

impl<T: CausalSolver + ?Sized> CausalSolver for &T {
    fn solve(&self, vars: &[VariableId]) -> Result<EdgeSet> {
        (**self).solve(vars)
    }

    fn may_emit_cycles(&self) -> bool {
        (**self).may_emit_cycles()
    }
}

/// Ground-truth solver: returns the true edges among `vars`, each with
/// significance 1.
#[derive(Clone, Copy, Debug)]
pub struct OracleSolver<'a> {
    dag: &'a Dag,
}

impl<'a> OracleSolver<'a> {
    pub fn new(dag: &'a Dag) -> Self {
        OracleSolver { dag }
    }
}

impl CausalSolver for OracleSolver<'_> {
    fn solve(&self, vars: &[VariableId]) -> Result<EdgeSet> {
        Ok(self
            .dag
            .induced_edges(vars)
            .into_iter()
            .map(|(parent, child)| Edge {
                parent,
                child,
                significance: 1.0,
            })
            .collect())
    }
}
