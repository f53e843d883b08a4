//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sada_core::bounds::{PartitionCounts, SubproblemRates};
use sada_core::graph::{Dag, VariableId};
use sada_core::solvers::EdgeSet;

/// The ten-variable graph the cut walkthrough is replayed on (0-based ids).
pub const WALKTHROUGH_EDGES: [(usize, usize); 10] = [
    (0, 3),
    (1, 3),
    (0, 2),
    (2, 6),
    (3, 6),
    (0, 5),
    (1, 4),
    (3, 7),
    (1, 7),
    (4, 8),
];

pub fn walkthrough_dag() -> Dag {
    Dag::new(9, WALKTHROUGH_EDGES).unwrap()
}

/// d-separation by enumerating every simple undirected path and checking
/// each triple on it.
pub fn brute_force_d_separated(g: &Dag, u: usize, v: usize, z: &[usize]) -> bool {
    let n = g.n();
    let id = VariableId;
    let adjacent = |a: usize, b: usize| g.has_edge(id(a), id(b)) || g.has_edge(id(b), id(a));
    let in_z: Vec<bool> = (0..n).map(|w| z.contains(&w)).collect();
    // w or a descendant of w is observed
    let activated: Vec<bool> = (0..n)
        .map(|w| in_z[w] || (0..n).any(|x| in_z[x] && g.reachable(id(w), id(x))))
        .collect();

    fn paths(
        adjacent: &dyn Fn(usize, usize) -> bool,
        n: usize,
        path: &mut Vec<usize>,
        target: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        let last = *path.last().unwrap();
        if last == target {
            out.push(path.clone());
            return;
        }
        for next in 0..n {
            if !path.contains(&next) && adjacent(last, next) {
                path.push(next);
                paths(adjacent, n, path, target, out);
                path.pop();
            }
        }
    }
    let mut all = Vec::new();
    paths(&adjacent, n, &mut vec![u], v, &mut all);

    let open = |p: &Vec<usize>| {
        p.windows(3).all(|w| {
            let (a, b, c) = (w[0], w[1], w[2]);
            let collider = g.has_edge(id(a), id(b)) && g.has_edge(id(c), id(b));
            if collider {
                activated[b]
            } else {
                !in_z[b]
            }
        })
    };
    !all.iter().any(open)
}

/// Transitive closure by repeated boolean matrix squaring.
pub fn closure_by_squaring(g: &Dag) -> Vec<Vec<bool>> {
    let n = g.n();
    let mut m: Vec<Vec<bool>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| g.has_edge(VariableId(a), VariableId(b)))
                .collect()
        })
        .collect();
    let mut span = 1;
    while span < n {
        let mut next = m.clone();
        for a in 0..n {
            for b in 0..n {
                next[a][b] = m[a][b] || (0..n).any(|k| m[a][k] && m[k][b]);
            }
        }
        m = next;
        span *= 2;
    }
    m
}

/// Exact mean edge count of the random generator: node `i` draws
/// `min(r, i)` parents with `r = ceil(d)` w.p. `d - floor(d)`, else `floor(d)`.
pub fn expected_generator_edges(n: usize, d: f64) -> f64 {
    let (lo, hi) = (d.floor(), d.ceil());
    let p_hi = d - lo;
    (0..n)
        .map(|i| {
            let i = i as f64;
            if hi == lo {
                lo.min(i)
            } else {
                p_hi * hi.min(i) + (1.0 - p_hi) * lo.min(i)
            }
        })
        .sum()
}

/// Conflict removal by re-running a cycle check from scratch for every
/// candidate edge.
pub fn reference_conflict_removal(edges: &EdgeSet) -> EdgeSet {
    let mut list: Vec<_> = edges.iter().collect();
    list.sort_by(|a, b| {
        b.significance
            .total_cmp(&a.significance)
            .then((a.parent, a.child).cmp(&(b.parent, b.child)))
    });
    let mut kept = EdgeSet::new();
    for e in list {
        if e.parent != e.child && !path_exists(&kept, e.child, e.parent) {
            kept.insert(e.parent, e.child, e.significance);
        }
    }
    kept
}

/// Whether `to` is reachable from `from` along edges of `edges` (a
/// zero-length path counts).
pub fn path_exists(edges: &EdgeSet, from: VariableId, to: VariableId) -> bool {
    let mut seen = BTreeSet::from([from]);
    let mut stack = vec![from];
    while let Some(x) = stack.pop() {
        if x == to {
            return true;
        }
        for (p, c) in edges.pairs() {
            if p == x && seen.insert(c) {
                stack.push(c);
            }
        }
    }
    false
}

/// Random edge set over `n` variables, self-loops excluded, significances
/// drawn from a small grid so ties occur.
pub fn random_edge_set(rng: &mut impl Rng, n: usize, density: f64) -> EdgeSet {
    let mut s = EdgeSet::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.random_bool(density) {
                let sig = rng.random_range(0..8) as f64 / 8.0;
                s.insert(VariableId(a), VariableId(b), sig);
            }
        }
    }
    s
}

/// Mean and standard error of a sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Simulates the cut-acceptance process: each of `n1·n2` crossing pairs is
/// an edge with probability `e / (e + f)`; an edge pair passes the
/// separation check with probability `beta` and a non-edge pair with
/// probability `1 - alpha`. Returns the crossing-edge count of every
/// accepted cut until `accepted` cuts have been seen.
#[allow(clippy::too_many_arguments)]
pub fn simulate_accepted_cuts(
    n1: usize,
    n2: usize,
    e: f64,
    f: f64,
    alpha: f64,
    beta: f64,
    accepted: usize,
    seed: u64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p_edge = e / (e + f);
    let mut out = Vec::with_capacity(accepted);
    while out.len() < accepted {
        let mut crossing = 0;
        let mut ok = true;
        for _ in 0..n1 * n2 {
            let pass = if rng.random_bool(p_edge) {
                crossing += 1;
                rng.random_bool(beta)
            } else {
                rng.random_bool(1.0 - alpha)
            };
            if !pass {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(crossing as f64);
        }
    }
    out
}

/// Simulates the union of two sub-results: every edge (non-edge) on side
/// `i` is found with probability `R_i` (`r_i`), and cut-set pairs appear in
/// both subproblems and are found independently in each. Returns per-trial
/// `(true, false)` counts.
pub fn simulate_merge(
    counts: &PartitionCounts,
    rates: &SubproblemRates,
    trials: usize,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let whole = |x: f64| {
        assert_eq!(x.fract(), 0.0, "simulation needs integer counts");
        x as usize
    };
    let draw =
        |k: usize, p: f64, rng: &mut ChaCha8Rng| (0..k).filter(|_| rng.random_bool(p)).count();
    let (mut em, mut fm) = (Vec::with_capacity(trials), Vec::with_capacity(trials));
    for _ in 0..trials {
        let mut t = draw(whole(counts.e1), rates.recall1, &mut rng)
            + draw(whole(counts.e2), rates.recall2, &mut rng);
        for _ in 0..whole(counts.ec) {
            let a = rng.random_bool(rates.recall1);
            let b = rng.random_bool(rates.recall2);
            t += (a || b) as usize;
        }
        let mut fl = draw(whole(counts.f1), rates.false1, &mut rng)
            + draw(whole(counts.f2), rates.false2, &mut rng);
        for _ in 0..whole(counts.fc) {
            let a = rng.random_bool(rates.false1);
            let b = rng.random_bool(rates.false2);
            fl += (a || b) as usize;
        }
        em.push(t as f64);
        fm.push(fl as f64);
    }
    (em, fm)
}
