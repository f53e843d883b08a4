//! Conditional-independence oracles.
//!
//! Every oracle answers "is `u` independent of `v` given `z`?" with a
//! [`CiVerdict`]. Statistical oracles hold the sample matrix they test against;
//! [`ExactOracle`] answers from a known graph via d-separation.

mod fisher;
mod gsquare;

pub use fisher::PartialCorrelationTest;
pub use gsquare::GSquaredTest;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SadaError};
use crate::graph::{Dag, VariableId};

/// Default significance threshold (95% confidence).
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Default cap on conditioning-set size during separator search.
pub const DEFAULT_MAX_COND: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CiVerdict {
    pub independent: bool,
    pub p_value: f64,
}

impl CiVerdict {
    pub fn from_p_value(p_value: f64, alpha: f64) -> Self {
        CiVerdict {
            independent: p_value > alpha,
            p_value,
        }
    }
}

/// Answers conditional-independence queries. Implementations must be
/// symmetric in `(u, v)` and insensitive to the order of `z`.
pub trait CiOracle: Sync {
    fn test(&self, u: VariableId, v: VariableId, z: &[VariableId]) -> Result<CiVerdict>;

    /// Largest conditioning set the oracle can answer without an
    /// insufficient-data error.
    fn cond_limit(&self) -> usize {
        usize::MAX
    }
}

impl<T: CiOracle + ?Sized> CiOracle for &T {
    fn test(&self, u: VariableId, v: VariableId, z: &[VariableId]) -> Result<CiVerdict> {
        (**self).test(u, v, z)
    }

    fn cond_limit(&self) -> usize {
        (**self).cond_limit()
    }
}

pub(crate) fn check_query(n: usize, u: VariableId, v: VariableId, z: &[VariableId]) -> Result<()> {
    for id in std::iter::once(u)
        .chain(std::iter::once(v))
        .chain(z.iter().copied())
    {
        if id.0 >= n {
            return Err(SadaError::UnknownVariable { id: id.0, n });
        }
    }
    if u == v {
        return Err(SadaError::InvalidArgument(format!(
            "query endpoints coincide ({u})"
        )));
    }
    if z.contains(&u) || z.contains(&v) {
        return Err(SadaError::InvalidArgument(
            "conditioning set contains a query endpoint".into(),
        ));
    }
    Ok(())
}

/// Reliable oracle backed by d-separation in a known graph.
#[derive(Clone, Copy, Debug)]
pub struct ExactOracle<'a> {
    dag: &'a Dag,
}

impl<'a> ExactOracle<'a> {
    pub fn new(dag: &'a Dag) -> Self {
        ExactOracle { dag }
    }
}

impl CiOracle for ExactOracle<'_> {
    fn test(&self, u: VariableId, v: VariableId, z: &[VariableId]) -> Result<CiVerdict> {
        check_query(self.dag.n(), u, v, z)?;
        let independent = self.dag.d_separated(u, v, z);
        Ok(CiVerdict {
            independent,
            p_value: if independent { 1.0 } else { 0.0 },
        })
    }
}

/// Searches subsets of `candidates` for one that renders `u` and `v`
/// independent.
///
/// Subsets are tried by increasing size up to `max_cond` (and the oracle's own
/// limit), lexicographically over the ascending candidate list; the first
/// accepted subset is returned, so it has minimum size under the cap.
pub fn find_separator<O: CiOracle + ?Sized>(
    oracle: &O,
    u: VariableId,
    v: VariableId,
    candidates: &[VariableId],
    max_cond: usize,
) -> Result<Option<Vec<VariableId>>> {
    if u == v {
        return Err(SadaError::InvalidArgument(format!(
            "separator query on {u} with itself"
        )));
    }
    let mut pool: Vec<VariableId> = candidates
        .iter()
        .copied()
        .filter(|&w| w != u && w != v)
        .collect();
    pool.sort_unstable();
    pool.dedup();
    let top = max_cond.min(oracle.cond_limit()).min(pool.len());
    for size in 0..=top {
        for subset in pool.iter().copied().combinations(size) {
            if oracle.test(u, v, &subset)?.independent {
                return Ok(Some(subset));
            }
        }
    }
    Ok(None)
}
