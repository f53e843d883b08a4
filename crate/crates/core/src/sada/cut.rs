use rand::seq::SliceRandom;
use rand::Rng;

use super::SadaConfig;
use crate::citest::{find_separator, CiOracle};
use crate::error::{Result, SadaError};
use crate::graph::{CausalCut, VariableId};

/// Whether `w` can be separated from every member of `side` by some subset
/// of `cut` (of size at most `max_cond`).
fn separable_from_all<O: CiOracle + ?Sized>(
    oracle: &O,
    w: VariableId,
    side: &[VariableId],
    cut: &[VariableId],
    max_cond: usize,
) -> Result<bool> {
    for &x in side {
        if find_separator(oracle, w, x, cut, max_cond)?.is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Grows a cut from the seed pair `(u, v)` with initial cut set `separator`.
///
/// Every other variable is visited in ascending id order: it joins `V2` when
/// a subset of the current cut set separates it from all of `V1`, otherwise
/// `V1` when the same holds against all of `V2`, otherwise the cut set. A
/// refinement pass then retries each cut-set member against the cut set
/// without it, `V2` first.
pub fn split_from_pair<O: CiOracle + ?Sized>(
    oracle: &O,
    vars: &[VariableId],
    u: VariableId,
    v: VariableId,
    separator: &[VariableId],
    max_cond: usize,
) -> Result<CausalCut> {
    if u == v || !vars.contains(&u) || !vars.contains(&v) {
        return Err(SadaError::InvalidArgument(
            "seed pair must be two distinct members of the variable set".into(),
        ));
    }
    if separator
        .iter()
        .any(|s| *s == u || *s == v || !vars.contains(s))
    {
        return Err(SadaError::InvalidArgument(
            "seed separator must come from the remaining variables".into(),
        ));
    }
    let mut left = vec![u];
    let mut right = vec![v];
    let mut cut: Vec<VariableId> = separator.to_vec();
    cut.sort_unstable();
    cut.dedup();

    let mut rest: Vec<VariableId> = vars
        .iter()
        .copied()
        .filter(|w| *w != u && *w != v && !cut.contains(w))
        .collect();
    rest.sort_unstable();
    rest.dedup();

    for w in rest {
        if separable_from_all(oracle, w, &left, &cut, max_cond)? {
            right.push(w);
        } else if separable_from_all(oracle, w, &right, &cut, max_cond)? {
            left.push(w);
        } else {
            cut.push(w);
            cut.sort_unstable();
        }
    }

    let snapshot = cut.clone();
    for s in snapshot {
        let others: Vec<VariableId> = cut.iter().copied().filter(|&c| c != s).collect();
        if separable_from_all(oracle, s, &left, &others, max_cond)? {
            right.push(s);
            cut = others;
        } else if separable_from_all(oracle, s, &right, &others, max_cond)? {
            left.push(s);
            cut = others;
        }
    }

    left.sort_unstable();
    right.sort_unstable();
    Ok(CausalCut {
        cut_set: cut,
        left,
        right,
    })
}

/// Samples a seed pair with a separator inside `vars`, trying pairs uniformly
/// without replacement and giving up after `5 * |vars|` failures.
fn sample_seed_pair<O: CiOracle + ?Sized>(
    oracle: &O,
    vars: &[VariableId],
    max_cond: usize,
    rng: &mut impl Rng,
) -> Result<Option<(VariableId, VariableId, Vec<VariableId>)>> {
    let mut pairs: Vec<(VariableId, VariableId)> = Vec::new();
    for (i, &a) in vars.iter().enumerate() {
        for &b in &vars[i + 1..] {
            pairs.push((a, b));
        }
    }
    pairs.shuffle(rng);
    let budget = 5 * vars.len();
    for (a, b) in pairs.into_iter().take(budget) {
        let pool: Vec<VariableId> = vars.iter().copied().filter(|&w| w != a && w != b).collect();
        if let Some(sep) = find_separator(oracle, a, b, &pool, max_cond)? {
            return Ok(Some((a, b, sep)));
        }
    }
    Ok(None)
}

/// Causal cut search with `cfg.k` random restarts.
///
/// Returns the cut with the largest `min(|V1|, |V2|)`, ties going to the
/// smaller cut set and then to the earlier restart, or `None` when no restart
/// finds a separable seed pair. Sets of fewer than three variables have no
/// cut.
pub fn find_causal_cut<O: CiOracle + ?Sized>(
    oracle: &O,
    vars: &[VariableId],
    cfg: &SadaConfig,
    rng: &mut impl Rng,
) -> Result<Option<CausalCut>> {
    cfg.validate()?;
    let mut vars = vars.to_vec();
    vars.sort_unstable();
    vars.dedup();
    if vars.len() < 3 {
        return Ok(None);
    }
    let mut best: Option<CausalCut> = None;
    for _ in 0..cfg.k {
        let Some((u, v, sep)) = sample_seed_pair(oracle, &vars, cfg.max_cond, rng)? else {
            continue;
        };
        let cut = split_from_pair(oracle, &vars, u, v, &sep, cfg.max_cond)?;
        let better = match &best {
            None => true,
            Some(b) => {
                cut.balance() > b.balance()
                    || (cut.balance() == b.balance() && cut.cut_set.len() < b.cut_set.len())
            }
        };
        if better {
            best = Some(cut);
        }
    }
    // both branches must be strictly smaller than the parent
    Ok(
        best.filter(|c| {
            c.left_problem().len() < vars.len() && c.right_problem().len() < vars.len()
        }),
    )
}
