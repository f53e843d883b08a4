use nalgebra::{DMatrix, DVector};
use statrs::function::erf::erfc;

use super::{check_query, CiOracle, CiVerdict};
use crate::error::{Result, SadaError};
use crate::graph::VariableId;
use crate::synth::SampleMatrix;

/// Smallest admissible Cholesky pivot (or residual variance) before a
/// conditioning set is declared collinear.
const SINGULAR_TOL: f64 = 1e-10;

/// Partial-correlation test with the Fisher z-transform.
///
/// The full correlation matrix is computed once; each query solves against
/// the conditioning block only.
#[derive(Clone, Debug)]
pub struct PartialCorrelationTest {
    n: usize,
    m: usize,
    corr: Vec<f64>,
    alpha: f64,
}

impl PartialCorrelationTest {
    pub fn new(data: &SampleMatrix, alpha: f64) -> Result<Self> {
        if !data.is_continuous() {
            return Err(SadaError::DataKind(
                "partial-correlation test needs continuous data".into(),
            ));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(SadaError::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        let n = data.n();
        let m = data.m();
        let centred: Vec<Vec<f64>> = data
            .columns()
            .iter()
            .map(|col| {
                let mean = col.iter().sum::<f64>() / m as f64;
                let c: Vec<f64> = col.iter().map(|x| x - mean).collect();
                let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    c.iter().map(|x| x / norm).collect()
                } else {
                    c
                }
            })
            .collect();
        let mut corr = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let r = if i == j {
                    1.0
                } else {
                    centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum()
                };
                corr[i * n + j] = r;
                corr[j * n + i] = r;
            }
        }
        Ok(PartialCorrelationTest { n, m, corr, alpha })
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.corr[i * self.n + j]
    }

    /// Sample partial correlation of `u` and `v` given `z`.
    pub fn partial_correlation(
        &self,
        u: VariableId,
        v: VariableId,
        z: &[VariableId],
    ) -> Result<f64> {
        let (u, v) = (u.0.min(v.0), u.0.max(v.0));
        if z.is_empty() {
            return Ok(self.r(u, v));
        }
        let mut zs: Vec<usize> = z.iter().map(|w| w.0).collect();
        zs.sort_unstable();
        let k = zs.len();
        let szz = DMatrix::from_fn(k, k, |a, b| self.r(zs[a], zs[b]));
        let chol = szz.cholesky().ok_or(SadaError::SingularConditioning)?;
        if chol.l().diagonal().iter().any(|&d| d * d < SINGULAR_TOL) {
            return Err(SadaError::SingularConditioning);
        }
        let su = DVector::from_fn(k, |a, _| self.r(u, zs[a]));
        let sv = DVector::from_fn(k, |a, _| self.r(v, zs[a]));
        let wu = chol.solve(&su);
        let wv = chol.solve(&sv);
        let uu = 1.0 - su.dot(&wu);
        let vv = 1.0 - sv.dot(&wv);
        if uu < SINGULAR_TOL || vv < SINGULAR_TOL {
            return Err(SadaError::SingularConditioning);
        }
        let uv = self.r(u, v) - su.dot(&wv);
        Ok((uv / (uu * vv).sqrt()).clamp(-1.0, 1.0))
    }
}

impl CiOracle for PartialCorrelationTest {
    fn test(&self, u: VariableId, v: VariableId, z: &[VariableId]) -> Result<CiVerdict> {
        check_query(self.n, u, v, z)?;
        if self.m <= z.len() + 3 {
            return Err(SadaError::InsufficientSamples {
                samples: self.m,
                cond_size: z.len(),
            });
        }
        let r = self.partial_correlation(u, v, z)?;
        let stat = r.atanh().abs() * ((self.m - z.len() - 3) as f64).sqrt();
        let p = if stat.is_finite() {
            erfc(stat / std::f64::consts::SQRT_2)
        } else {
            0.0
        };
        Ok(CiVerdict::from_p_value(p, self.alpha))
    }

    fn cond_limit(&self) -> usize {
        self.m.saturating_sub(4)
    }
}
