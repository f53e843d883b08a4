use super::{CausalSolver, EdgeSet};
use crate::error::{Result, SadaError};
use crate::graph::VariableId;
use crate::stats::{chi2_sf, g_squared_pair};
use crate::synth::SampleMatrix;

/// Pairwise additive-noise solver for discrete data with cyclic residuals.
///
/// For an ordered pair `x → y` the regression function is the conditional
/// mode of `y` given `x`, the residual is `(y - f(x)) mod k`, and the fit is
/// accepted when a G² test finds the residual independent of `x`. A direction
/// is emitted only if it is accepted and the reverse is rejected; its
/// significance is the forward p-value.
///
/// Pairs are judged independently, so the output may contain cycles.
#[derive(Clone, Debug)]
pub struct DiscreteAnmSolver {
    codes: Vec<Vec<u32>>,
    states: usize,
    alpha: f64,
}

impl DiscreteAnmSolver {
    pub fn new(data: &SampleMatrix, alpha: f64) -> Result<Self> {
        let states = data
            .num_states()
            .ok_or_else(|| SadaError::DataKind("discrete ANM solver needs discrete data".into()))?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(SadaError::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        let codes = data
            .columns()
            .iter()
            .map(|c| c.iter().map(|&x| x as u32).collect())
            .collect();
        Ok(DiscreteAnmSolver {
            codes,
            states,
            alpha,
        })
    }

    /// p-value of the residual-independence test for `cause → effect`.
    pub fn fit_p_value(&self, cause: VariableId, effect: VariableId) -> f64 {
        let k = self.states;
        let x = &self.codes[cause.0];
        let y = &self.codes[effect.0];
        let mut joint = vec![0u32; k * k];
        for (&a, &b) in x.iter().zip(y) {
            joint[a as usize * k + b as usize] += 1;
        }
        // conditional mode, ties to the smallest state
        let mode: Vec<u32> = joint
            .chunks_exact(k)
            .map(|row| {
                let mut best = 0;
                for (s, &c) in row.iter().enumerate() {
                    if c > row[best] {
                        best = s;
                    }
                }
                best as u32
            })
            .collect();
        let k32 = k as u32;
        let resid: Vec<u32> = x
            .iter()
            .zip(y)
            .map(|(&a, &b)| (b + k32 - mode[a as usize]) % k32)
            .collect();
        let (g2, df) = g_squared_pair(x, &resid, k);
        chi2_sf(g2, df)
    }

    fn is_constant(&self, v: VariableId) -> bool {
        let col = &self.codes[v.0];
        col.iter().all(|&x| x == col[0])
    }
}

impl CausalSolver for DiscreteAnmSolver {
    fn solve(&self, vars: &[VariableId]) -> Result<EdgeSet> {
        let mut out = EdgeSet::new();
        let live: Vec<VariableId> = vars
            .iter()
            .copied()
            .filter(|&v| !self.is_constant(v))
            .collect();
        for (i, &a) in live.iter().enumerate() {
            for &b in &live[i + 1..] {
                let forward = self.fit_p_value(a, b);
                let backward = self.fit_p_value(b, a);
                let fwd_ok = forward > self.alpha;
                let bwd_ok = backward > self.alpha;
                if fwd_ok && !bwd_ok {
                    out.insert(a, b, forward);
                } else if bwd_ok && !fwd_ok {
                    out.insert(b, a, backward);
                }
            }
        }
        Ok(out)
    }

    fn may_emit_cycles(&self) -> bool {
        true
    }
}
