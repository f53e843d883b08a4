//! Directed acyclic graphs over dense variable indices.
//!
//! A [`Dag`] is validated on construction and immutable afterwards, so it can be
//! shared freely between worker threads. Besides the basic adjacency queries it
//! answers the two questions the rest of the crate leans on: directed
//! reachability and d-separation.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SadaError};

/// Dense 0-based index of a variable within one problem instance.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VariableId(pub usize);

impl VariableId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for VariableId {
    fn from(i: usize) -> Self {
        VariableId(i)
    }
}

impl fmt::Display for VariableId {
    /// Displays the 1-based label, e.g. `v3` for index 2.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0 + 1)
    }
}

/// Shorthand for building id lists in tests and examples.
pub fn ids(raw: &[usize]) -> Vec<VariableId> {
    raw.iter().copied().map(VariableId).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dag {
    n: usize,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Dag {
    /// Builds a DAG on `n` variables, rejecting self-loops, duplicate edges,
    /// out-of-range endpoints and directed cycles.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for (p, c) in edges {
            for id in [p, c] {
                if id >= n {
                    return Err(SadaError::UnknownVariable { id, n });
                }
            }
            if p == c {
                return Err(SadaError::InvalidArgument(format!(
                    "self-loop on {}",
                    VariableId(p)
                )));
            }
            if !seen.insert((p, c)) {
                return Err(SadaError::InvalidArgument(format!(
                    "duplicate edge {} -> {}",
                    VariableId(p),
                    VariableId(c)
                )));
            }
            parents[c].push(p);
            children[p].push(c);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        topological_sort(n, &children)?;
        Ok(Dag {
            n,
            parents,
            children,
        })
    }

    pub fn empty(n: usize) -> Self {
        Dag {
            n,
            parents: vec![Vec::new(); n],
            children: vec![Vec::new(); n],
        }
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `v1..vn` as ids, ascending.
    pub fn variables(&self) -> Vec<VariableId> {
        (0..self.n).map(VariableId).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// All edges as `(parent, child)`, sorted.
    pub fn edges(&self) -> Vec<(VariableId, VariableId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (p, kids) in self.children.iter().enumerate() {
            out.extend(kids.iter().map(|&c| (VariableId(p), VariableId(c))));
        }
        out
    }

    pub fn has_edge(&self, parent: VariableId, child: VariableId) -> bool {
        self.children
            .get(parent.0)
            .is_some_and(|kids| kids.binary_search(&child.0).is_ok())
    }

    pub fn parents(&self, v: VariableId) -> &[usize] {
        &self.parents[v.0]
    }

    pub fn children(&self, v: VariableId) -> &[usize] {
        &self.children[v.0]
    }

    pub fn max_in_degree(&self) -> usize {
        self.parents.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Edges with both endpoints in `vars`.
    pub fn induced_edges(&self, vars: &[VariableId]) -> Vec<(VariableId, VariableId)> {
        let mut member = vec![false; self.n];
        for v in vars {
            member[v.0] = true;
        }
        self.edges()
            .into_iter()
            .filter(|(p, c)| member[p.0] && member[c.0])
            .collect()
    }

    /// A linear order in which every parent precedes its children.
    pub fn topological_order(&self) -> Vec<VariableId> {
        topological_sort(self.n, &self.children)
            .expect("Dag is validated acyclic on construction")
            .into_iter()
            .map(VariableId)
            .collect()
    }

    /// True iff a directed path of length at least one leads from `u` to `v`.
    pub fn reachable(&self, u: VariableId, v: VariableId) -> bool {
        let mut visited = vec![false; self.n];
        let mut stack: Vec<usize> = self.children[u.0].clone();
        while let Some(x) = stack.pop() {
            if x == v.0 {
                return true;
            }
            if !visited[x] {
                visited[x] = true;
                stack.extend_from_slice(&self.children[x]);
            }
        }
        false
    }

    /// Ancestors of `set`, including the members of `set` themselves.
    fn ancestral_closure(&self, set: &[bool]) -> Vec<bool> {
        let mut anc = set.to_vec();
        let mut stack: Vec<usize> = (0..self.n).filter(|&i| set[i]).collect();
        while let Some(x) = stack.pop() {
            for &p in &self.parents[x] {
                if !anc[p] {
                    anc[p] = true;
                    stack.push(p);
                }
            }
        }
        anc
    }

    /// Whether `z` d-separates `u` and `v`.
    ///
    /// Runs the reachable-trail search: a trail may pass a non-collider only
    /// when it is unobserved, and a collider only when it is an ancestor of
    /// (or in) `z`.
    pub fn d_separated(&self, u: VariableId, v: VariableId, z: &[VariableId]) -> bool {
        debug_assert!(u != v, "d-separation query needs distinct endpoints");
        let mut observed = vec![false; self.n];
        for w in z {
            observed[w.0] = true;
        }
        debug_assert!(!observed[u.0] && !observed[v.0]);
        let anc = self.ancestral_closure(&observed);

        // visited[x][0]: arrived travelling up (from a child)
        // visited[x][1]: arrived travelling down (from a parent)
        let mut visited = vec![[false; 2]; self.n];
        let mut queue = VecDeque::new();
        queue.push_back((u.0, 0usize));
        while let Some((x, dir)) = queue.pop_front() {
            if visited[x][dir] {
                continue;
            }
            visited[x][dir] = true;
            if x == v.0 {
                return false;
            }
            if dir == 0 {
                if !observed[x] {
                    queue.extend(self.parents[x].iter().map(|&p| (p, 0)));
                    queue.extend(self.children[x].iter().map(|&c| (c, 1)));
                }
            } else {
                if !observed[x] {
                    queue.extend(self.children[x].iter().map(|&c| (c, 1)));
                }
                if anc[x] {
                    queue.extend(self.parents[x].iter().map(|&p| (p, 0)));
                }
            }
        }
        true
    }
}

/// Kahn's algorithm over a child-adjacency list; fails on a cycle.
pub fn topological_sort(n: usize, children: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    for kids in children {
        for &c in kids {
            indeg[c] += 1;
        }
    }
    // Smallest-index-first keeps the order deterministic.
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(x) = ready.pop_first() {
        order.push(x);
        for &c in &children[x] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err(SadaError::Cycle)
    }
}

/// Random DAG in which variable `i` draws its parents uniformly from the
/// variables before it.
///
/// The parent count is `⌈d⌉` with probability `d - ⌊d⌋` and `⌊d⌋` otherwise,
/// truncated to the number of available predecessors.
pub fn generate_random_dag(n: usize, avg_in_degree: f64, seed: u64) -> Result<Dag> {
    if n == 0 {
        return Err(SadaError::InvalidArgument("n must be at least 1".into()));
    }
    if !(avg_in_degree.is_finite() && avg_in_degree >= 0.0) {
        return Err(SadaError::InvalidArgument(format!(
            "average in-degree must be a non-negative number, got {avg_in_degree}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = avg_in_degree.floor();
    let frac = avg_in_degree - lo;
    let mut edges = Vec::new();
    for i in 0..n {
        let draw = if frac > 0.0 && rng.random_bool(frac) {
            lo + 1.0
        } else {
            lo
        };
        let count = (draw as usize).min(i);
        edges.extend(
            index::sample(&mut rng, i, count)
                .into_iter()
                .map(|p| (p, i)),
        );
    }
    Dag::new(n, edges)
}

/// Parses the whitespace-separated edge-list format.
///
/// Each non-empty line is either `parent child` (0-based) or an `n=<count>`
/// header; `#` starts a comment. Without a header the variable count is one
/// past the largest id seen.
pub fn parse_edge_list(text: &str, origin: &Path) -> Result<Dag> {
    let err = |line: usize, message: String| SadaError::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut declared: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("n=") {
            if declared.is_some() {
                return Err(err(lineno, "repeated n= header".into()));
            }
            let n = rest
                .trim()
                .parse::<usize>()
                .map_err(|e| err(lineno, format!("bad variable count: {e}")))?;
            declared = Some((n, lineno));
            continue;
        }
        let mut fields = line.split_whitespace();
        let mut next = |what: &str| -> Result<usize> {
            let tok = fields
                .next()
                .ok_or_else(|| err(lineno, format!("missing {what}")))?;
            tok.parse::<usize>()
                .map_err(|e| err(lineno, format!("bad {what} {tok:?}: {e}")))
        };
        let p = next("parent")?;
        let c = next("child")?;
        if fields.next().is_some() {
            return Err(err(lineno, "expected exactly two fields".into()));
        }
        edges.push((p, c, lineno));
    }
    let n = match declared {
        Some((n, _)) => n,
        None => edges
            .iter()
            .map(|&(p, c, _)| p.max(c) + 1)
            .max()
            .unwrap_or(0),
    };
    for &(p, c, lineno) in &edges {
        if p >= n || c >= n {
            return Err(err(lineno, format!("edge {p} {c} exceeds n={n}")));
        }
        if p == c {
            return Err(err(lineno, format!("self-loop on {p}")));
        }
    }
    let mut dedup = BTreeSet::new();
    for &(p, c, lineno) in &edges {
        if !dedup.insert((p, c)) {
            return Err(err(lineno, format!("duplicate edge {p} {c}")));
        }
    }
    Dag::new(n, edges.into_iter().map(|(p, c, _)| (p, c)))
}

/// Serializes to the edge-list format. The `n=` header is written only when
/// the edges alone would not recover the variable count.
pub fn format_edge_list(g: &Dag) -> String {
    let edges = g.edges();
    let implied = edges
        .iter()
        .map(|(p, c)| p.0.max(c.0) + 1)
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    if implied != g.n() || edges.is_empty() {
        out.push_str(&format!("n={}\n", g.n()));
    }
    for (p, c) in edges {
        out.push_str(&format!("{} {}\n", p.0, c.0));
    }
    out
}

pub fn load_dag(path: impl AsRef<Path>) -> Result<Dag> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_edge_list(&text, path)
}

pub fn save_dag(g: &Dag, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_edge_list(g))?;
    Ok(())
}

/// A disjoint triple `(C, V1, V2)` covering a variable set, with no edge
/// between `V1` and `V2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalCut {
    pub cut_set: Vec<VariableId>,
    pub left: Vec<VariableId>,
    pub right: Vec<VariableId>,
}

impl CausalCut {
    /// Checks the type invariants against the variable set the cut was made on.
    pub fn validate(&self, vars: &[VariableId]) -> Result<()> {
        if self.left.is_empty() || self.right.is_empty() {
            return Err(SadaError::InvalidArgument("cut side is empty".into()));
        }
        let mut all: Vec<VariableId> = self
            .cut_set
            .iter()
            .chain(&self.left)
            .chain(&self.right)
            .copied()
            .collect();
        all.sort_unstable();
        let before = all.len();
        all.dedup();
        if all.len() != before {
            return Err(SadaError::InvalidArgument("cut parts overlap".into()));
        }
        let mut expect = vars.to_vec();
        expect.sort_unstable();
        if all != expect {
            return Err(SadaError::InvalidArgument(
                "cut parts do not cover the variable set".into(),
            ));
        }
        Ok(())
    }

    /// `min(|V1|, |V2|)`, the balance objective.
    pub fn balance(&self) -> usize {
        self.left.len().min(self.right.len())
    }

    /// Variables of the first subproblem, `V1 ∪ C`, sorted.
    pub fn left_problem(&self) -> Vec<VariableId> {
        let mut v: Vec<_> = self.left.iter().chain(&self.cut_set).copied().collect();
        v.sort_unstable();
        v
    }

    /// Variables of the second subproblem, `V2 ∪ C`, sorted.
    pub fn right_problem(&self) -> Vec<VariableId> {
        let mut v: Vec<_> = self.right.iter().chain(&self.cut_set).copied().collect();
        v.sort_unstable();
        v
    }
}
