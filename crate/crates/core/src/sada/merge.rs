use std::collections::BTreeMap;

use crate::citest::{find_separator, CiOracle};
use crate::error::Result;
use crate::graph::VariableId;
use crate::solvers::{Edge, EdgeSet};

/// Longest directed path (in edges) considered when looking for a path that
/// explains away a direct edge.
pub const MAX_PATH_LEN: usize = 6;

/// Paths examined per edge before giving up on it.
pub const MAX_PATHS_PER_EDGE: usize = 64;

/// Edges by descending significance; ties in ascending `(parent, child)`.
fn by_descending_significance(edges: &EdgeSet) -> Vec<Edge> {
    let mut list: Vec<Edge> = edges.iter().collect();
    list.sort_by(|a, b| b.significance.total_cmp(&a.significance));
    list
}

/// Dense reindexing of the variables mentioned by an edge set.
fn dense_index(edges: &EdgeSet) -> (Vec<VariableId>, BTreeMap<VariableId, usize>) {
    let vars = edges.variables();
    let index = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    (vars, index)
}

/// Breaks every directed cycle by keeping edges in descending significance and
/// dropping each edge whose head already reaches its tail.
pub fn remove_conflicts(edges: &EdgeSet) -> EdgeSet {
    let (vars, index) = dense_index(edges);
    let n = vars.len();
    let words = n.div_ceil(64);
    // reach[x] holds every y with a kept path x -> ... -> y
    let mut reach = vec![vec![0u64; words]; n];
    let get = |row: &[u64], y: usize| row[y / 64] >> (y % 64) & 1 == 1;

    let mut kept = EdgeSet::new();
    for e in by_descending_significance(edges) {
        let (a, b) = (index[&e.parent], index[&e.child]);
        if a == b || get(&reach[b], a) {
            continue;
        }
        kept.insert(e.parent, e.child, e.significance);
        if get(&reach[a], b) {
            continue;
        }
        let mut gain = reach[b].clone();
        gain[b / 64] |= 1 << (b % 64);
        for (x, row) in reach.iter_mut().enumerate() {
            if x == a || get(row, a) {
                for (w, g) in row.iter_mut().zip(&gain) {
                    *w |= g;
                }
            }
        }
    }
    kept
}

/// Simple directed paths `from -> ... -> to` of 2 to `MAX_PATH_LEN` edges,
/// skipping the direct edge; returns the intermediate variables of each.
fn indirect_paths(
    children: &BTreeMap<VariableId, Vec<VariableId>>,
    from: VariableId,
    to: VariableId,
) -> Vec<Vec<VariableId>> {
    fn walk(
        children: &BTreeMap<VariableId, Vec<VariableId>>,
        from: VariableId,
        to: VariableId,
        path: &mut Vec<VariableId>,
        out: &mut Vec<Vec<VariableId>>,
    ) {
        let at = *path.last().expect("walk starts on a non-empty path");
        for &next in children.get(&at).into_iter().flatten() {
            if out.len() >= MAX_PATHS_PER_EDGE {
                return;
            }
            if next == to {
                out.push(path.clone());
            } else if next != from && !path.contains(&next) && path.len() + 2 <= MAX_PATH_LEN {
                path.push(next);
                walk(children, from, to, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    for &first in children.get(&from).into_iter().flatten() {
        if first == to || out.len() >= MAX_PATHS_PER_EDGE {
            continue;
        }
        let mut path = vec![first];
        walk(children, from, to, &mut path, &mut out);
    }
    out
}

/// Drops a direct edge `a -> b` when some other directed path `a -> ... -> b`
/// has intermediates containing a separating set for `a` and `b`.
///
/// Edges are examined from least to most significant and removals take
/// effect immediately.
pub fn remove_redundancy<O: CiOracle + ?Sized>(
    edges: &EdgeSet,
    oracle: &O,
    max_cond: usize,
) -> Result<EdgeSet> {
    let mut kept = edges.clone();
    let mut order = by_descending_significance(edges);
    order.reverse();
    for e in order {
        let mut children: BTreeMap<VariableId, Vec<VariableId>> = BTreeMap::new();
        for (p, c) in kept.pairs() {
            children.entry(p).or_default().push(c);
        }
        for path in indirect_paths(&children, e.parent, e.child) {
            if find_separator(oracle, e.parent, e.child, &path, max_cond)?.is_some() {
                kept.remove(e.parent, e.child);
                break;
            }
        }
    }
    Ok(kept)
}

/// Merges two partial results: union (shared pairs keep the larger
/// significance), conflict removal, then redundancy removal. The result is
/// acyclic.
pub fn merge_results<O: CiOracle + ?Sized>(
    g1: &EdgeSet,
    g2: &EdgeSet,
    oracle: &O,
    max_cond: usize,
) -> Result<EdgeSet> {
    let mut union = g1.clone();
    union.extend_from(g2);
    let acyclic = remove_conflicts(&union);
    remove_redundancy(&acyclic, oracle, max_cond)
}
