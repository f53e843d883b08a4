use nalgebra::{DMatrix, DVector};

use super::{CausalSolver, Edge, EdgeSet};
use crate::error::{Result, SadaError};
use crate::graph::VariableId;
use crate::stats::chi2_sf;
use crate::synth::{standardize, SampleMatrix};

/// LiNGAM-style solver for continuous data.
///
/// The causal order is found DirectLiNGAM-fashion: repeatedly take the most
/// exogenous remaining variable and replace the others by their residuals on
/// it. Each variable is then regressed on all of its predecessors and an edge
/// is kept when the coefficient's Wald test rejects zero at `prune_alpha`.
/// Edge significance is `1 - p`.
#[derive(Clone, Debug)]
pub struct LingamSolver<'a> {
    data: &'a SampleMatrix,
    prune_alpha: f64,
}

impl<'a> LingamSolver<'a> {
    pub fn new(data: &'a SampleMatrix, prune_alpha: f64) -> Result<Self> {
        if !data.is_continuous() {
            return Err(SadaError::DataKind(
                "LiNGAM solver needs continuous data".into(),
            ));
        }
        if !(prune_alpha > 0.0 && prune_alpha < 1.0) {
            return Err(SadaError::InvalidArgument(format!(
                "prune alpha must lie in (0, 1), got {prune_alpha}"
            )));
        }
        Ok(LingamSolver { data, prune_alpha })
    }

    /// Estimated causal order of `vars`, most exogenous first.
    pub fn causal_order(&self, vars: &[VariableId]) -> Vec<VariableId> {
        let cols: Vec<Vec<f64>> = vars
            .iter()
            .map(|&v| {
                let mut c = self.data.column(v).to_vec();
                standardize(&mut c);
                c
            })
            .collect();
        causal_order(cols).into_iter().map(|i| vars[i]).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / m, b.iter().sum::<f64>() / m);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Residual of `y` regressed on `x` (both centred), rescaled to unit variance.
fn residual(y: &[f64], x: &[f64]) -> Vec<f64> {
    let xx = dot(x, x);
    let b = if xx > 0.0 { dot(x, y) / xx } else { 0.0 };
    let mut r: Vec<f64> = y.iter().zip(x).map(|(yi, xi)| yi - b * xi).collect();
    standardize(&mut r);
    r
}

/// Nonlinear dependence between a regressor and a residual:
/// `|corr(x, tanh r)| + |corr(tanh x, r)|`.
fn dependence(x: &[f64], tanh_x: &[f64], r: &[f64]) -> f64 {
    let tanh_r: Vec<f64> = r.iter().map(|v| v.tanh()).collect();
    corr(x, &tanh_r).abs() + corr(tanh_x, r).abs()
}

/// Order over column indices; `cols` must be standardized.
fn causal_order(mut cols: Vec<Vec<f64>>) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..cols.len()).collect();
    let mut order = Vec::with_capacity(cols.len());
    while remaining.len() > 1 {
        let mut best = (f64::INFINITY, remaining[0]);
        for &x in &remaining {
            let tanh_x: Vec<f64> = cols[x].iter().map(|v| v.tanh()).collect();
            let score: f64 = remaining
                .iter()
                .filter(|&&y| y != x)
                .map(|&y| dependence(&cols[x], &tanh_x, &residual(&cols[y], &cols[x])))
                .sum();
            if score < best.0 {
                best = (score, x);
            }
        }
        let root = best.1;
        order.push(root);
        remaining.retain(|&v| v != root);
        let root_col = cols[root].clone();
        for &y in &remaining {
            cols[y] = residual(&cols[y], &root_col);
        }
    }
    order.extend(remaining);
    order
}

/// OLS of `y` on `xs` (all centred, no intercept): coefficients and their
/// Wald-test p-values.
fn wald_regression(y: &[f64], xs: &[&[f64]]) -> Result<Vec<(f64, f64)>> {
    let m = y.len();
    let p = xs.len();
    if m <= p + 1 {
        return Err(SadaError::RankDeficient {
            regressors: p,
            samples: m,
        });
    }
    let x = DMatrix::from_fn(m, p, |i, j| xs[j][i]);
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * DVector::from_column_slice(y);
    let chol = xtx.cholesky().ok_or(SadaError::RankDeficient {
        regressors: p,
        samples: m,
    })?;
    let beta = chol.solve(&xty);
    let fitted = &x * &beta;
    let rss: f64 = y
        .iter()
        .zip(fitted.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    // one degree of freedom for the centring
    let sigma2 = rss / (m - p - 1) as f64;
    let inv = chol.inverse();
    Ok((0..p)
        .map(|j| {
            let var = sigma2 * inv[(j, j)];
            let wald = if var > 0.0 {
                beta[j] * beta[j] / var
            } else {
                f64::INFINITY
            };
            let pval = if wald.is_finite() {
                chi2_sf(wald, 1)
            } else {
                0.0
            };
            (beta[j], pval)
        })
        .collect())
}

impl CausalSolver for LingamSolver<'_> {
    fn solve(&self, vars: &[VariableId]) -> Result<EdgeSet> {
        let mut out = EdgeSet::new();
        if vars.len() < 2 {
            return Ok(out);
        }
        let order = self.causal_order(vars);
        let cols: Vec<Vec<f64>> = order
            .iter()
            .map(|&v| {
                let mut c = self.data.column(v).to_vec();
                standardize(&mut c);
                c
            })
            .collect();
        for i in 1..order.len() {
            let xs: Vec<&[f64]> = cols[..i].iter().map(Vec::as_slice).collect();
            let fits = wald_regression(&cols[i], &xs)?;
            for (j, (_, pval)) in fits.into_iter().enumerate() {
                if pval < self.prune_alpha {
                    out.insert(order[j], order[i], 1.0 - pval);
                }
            }
        }
        debug_assert!(out
            .iter()
            .all(|Edge { parent, child, .. }| { vars.contains(&parent) && vars.contains(&child) }));
        Ok(out)
    }
}
