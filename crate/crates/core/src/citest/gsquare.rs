use super::{check_query, CiOracle, CiVerdict};
use crate::error::{Result, SadaError};
use crate::graph::VariableId;
use crate::stats::{chi2_sf, g_squared};
use crate::synth::SampleMatrix;

/// Minimum expected samples per contingency cell before a test is trusted.
const MIN_SAMPLES_PER_CELL: usize = 5;

/// G² (log-likelihood ratio) test on discrete data.
///
/// The `u × v` table is stratified by the joint configuration of `z`. Empty
/// cells contribute nothing, and each observed stratum contributes
/// `(rows - 1)(cols - 1)` degrees of freedom counting only its non-empty rows
/// and columns.
#[derive(Clone, Debug)]
pub struct GSquaredTest {
    codes: Vec<Vec<u32>>,
    states: usize,
    m: usize,
    alpha: f64,
}

impl GSquaredTest {
    pub fn new(data: &SampleMatrix, alpha: f64) -> Result<Self> {
        let states = data
            .num_states()
            .ok_or_else(|| SadaError::DataKind("G² test needs discrete data".into()))?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(SadaError::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        let codes = data
            .columns()
            .iter()
            .map(|col| col.iter().map(|&x| x as u32).collect())
            .collect();
        Ok(GSquaredTest {
            codes,
            states,
            m: data.m(),
            alpha,
        })
    }

    fn cells(&self, cond_size: usize) -> Option<usize> {
        let k = self.states;
        (0..cond_size).try_fold(k.checked_mul(k)?, |acc, _| acc.checked_mul(k))
    }

    /// G² statistic and degrees of freedom.
    pub fn statistic(&self, u: VariableId, v: VariableId, z: &[VariableId]) -> (f64, usize) {
        let k = self.states;
        let (u, v) = (u.0.min(v.0), u.0.max(v.0));
        let mut zs: Vec<usize> = z.iter().map(|w| w.0).collect();
        zs.sort_unstable();
        let strata = k.pow(zs.len() as u32);
        let mut counts = vec![0u32; strata * k * k];
        for i in 0..self.m {
            let s = zs
                .iter()
                .fold(0usize, |acc, &w| acc * k + self.codes[w][i] as usize);
            let a = self.codes[u][i] as usize;
            let b = self.codes[v][i] as usize;
            counts[(s * k + a) * k + b] += 1;
        }
        g_squared(&counts, k)
    }
}

impl CiOracle for GSquaredTest {
    fn test(&self, u: VariableId, v: VariableId, z: &[VariableId]) -> Result<CiVerdict> {
        check_query(self.codes.len(), u, v, z)?;
        let cells = self.cells(z.len()).unwrap_or(usize::MAX);
        if cells.saturating_mul(MIN_SAMPLES_PER_CELL) > self.m {
            return Err(SadaError::UnreliableTest {
                cells,
                samples: self.m,
            });
        }
        let (g2, df) = self.statistic(u, v, z);
        Ok(CiVerdict::from_p_value(chi2_sf(g2, df), self.alpha))
    }

    fn cond_limit(&self) -> usize {
        let mut size = 0;
        while self
            .cells(size + 1)
            .is_some_and(|c| c.saturating_mul(MIN_SAMPLES_PER_CELL) <= self.m)
        {
            size += 1;
        }
        size
    }
}
