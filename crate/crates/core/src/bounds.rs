//! Closed-form error analysis of one split-and-merge step: cut errors, merged
//! edge counts, precision conditions, removal bounds and the recall margin.
//!
//! Counts are real-valued so that expected values (for instance `e = n·d`)
//! can be plugged in directly.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Result, SadaError};

/// False-edge rate that, with the other defaults of
/// [`ErrorModel::from_degree`], gives a recall margin of 0.0404 at
/// `n = 100, d = 1.25, n_c = 10`. It is a calibration, not a measured rate.
pub const CALIBRATED_FALSE_RATE: f64 = 0.1;

/// Parameters of the error analysis.
///
/// `n1` and `n2` are the sizes of the two cut sides `V1` and `V2` (without
/// the cut set); `e` and `f` count edges and non-edge ordered pairs over all
/// `n` variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub nc: usize,
    pub e: f64,
    pub f: f64,
    /// Average in-degree.
    pub d: f64,
    /// Probability an independence is reported as a dependence.
    pub alpha: f64,
    /// Probability a dependence is reported as an independence.
    pub beta: f64,
    /// Probability a false edge outranks a true one in significance.
    pub epsilon: f64,
    #[serde(alias = "R")]
    pub recall: f64,
    #[serde(alias = "P")]
    pub precision: f64,
    /// Probability a given non-edge pair is reported as an edge.
    #[serde(alias = "r")]
    pub false_rate: f64,
    pub delta: f64,
    pub gamma: f64,
}

impl ErrorModel {
    /// Model on `n` variables with average in-degree `d`: `e = n·d`, a cut
    /// set of 10 split evenly, all error rates 0.05, `P = R = 0.5` and the
    /// calibrated false-edge rate.
    pub fn from_degree(n: usize, d: f64) -> Self {
        let e = n as f64 * d;
        let nc = 10.min(n);
        let side = (n - nc) / 2;
        ErrorModel {
            n,
            n1: side,
            n2: n - nc - side,
            nc,
            e,
            f: (n * n - n) as f64 - e,
            d,
            alpha: 0.05,
            beta: 0.05,
            epsilon: 0.05,
            recall: 0.5,
            precision: 0.5,
            false_rate: CALIBRATED_FALSE_RATE,
            delta: 0.0,
            gamma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SadaError::InvalidArgument(msg));
        if self.n == 0 {
            return bad("model needs at least one variable".into());
        }
        if self.n1 + self.n2 + self.nc > self.n {
            return bad(format!(
                "partition sizes {} + {} + {} exceed n = {}",
                self.n1, self.n2, self.nc, self.n
            ));
        }
        if self.e < 0.0 || self.f < 0.0 || self.d < 0.0 {
            return bad("edge counts and in-degree must be nonnegative".into());
        }
        let pairs = (self.n * self.n - self.n) as f64;
        if ((self.e + self.f) - pairs).abs() > 1e-9 * pairs.max(1.0) {
            return bad(format!("e + f = {} but n² - n = {pairs}", self.e + self.f));
        }
        for (name, p) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("epsilon", self.epsilon),
            ("recall", self.recall),
            ("precision", self.precision),
            ("false_rate", self.false_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if self.delta < 0.0 || self.gamma < 0.0 {
            return bad("delta and gamma must be nonnegative".into());
        }
        Ok(())
    }

    /// `e·β / (f·(1 - α))`, the per-pair odds of a hidden crossing edge.
    fn crossing_odds(&self) -> Result<f64> {
        self.validate()?;
        if self.f == 0.0 {
            return Err(SadaError::UndefinedModel("f = 0: no non-edge pairs".into()));
        }
        if self.alpha == 1.0 {
            return Err(SadaError::UndefinedModel(
                "alpha = 1: no cut is ever accepted".into(),
            ));
        }
        Ok(self.e * self.beta / (self.f * (1.0 - self.alpha)))
    }

    /// `d²/n · (1 + d/n)^(n-2)`, the expected-path factor of the removal
    /// bounds (per cut-set variable).
    fn path_factor(&self) -> f64 {
        let n = self.n as f64;
        self.d * self.d / n * (1.0 + self.d / n).powf(n - 2.0)
    }

    /// `2·n_c²·r + d²·n_c/n · (1 + d/n)^(n-2)`.
    fn removal_core(&self) -> f64 {
        let nc = self.nc as f64;
        2.0 * nc * nc * self.false_rate + nc * self.path_factor()
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Posterior over the number of hidden edges between `V1` and `V2` given
/// that the cut was accepted: entry `i` is
/// `C(N, i)·ρ^i / Σ_j C(N, j)·ρ^j` with `N = n1·n2`.
pub fn cut_error_distribution(model: &ErrorModel) -> Result<Vec<f64>> {
    let rho = model.crossing_odds()?;
    let pairs = (model.n1 * model.n2) as u64;
    if rho == 0.0 {
        let mut out = vec![0.0; pairs as usize + 1];
        out[0] = 1.0;
        return Ok(out);
    }
    let ln_rho = rho.ln();
    let logs: Vec<f64> = (0..=pairs)
        .map(|i| ln_binomial(pairs, i) + i as f64 * ln_rho)
        .collect();
    let norm = log_sum_exp(&logs);
    Ok(logs.into_iter().map(|l| (l - norm).exp()).collect())
}

pub fn cut_error_posterior(model: &ErrorModel, i: usize) -> Result<f64> {
    let pairs = model.n1 * model.n2;
    if i > pairs {
        return Err(SadaError::InvalidArgument(format!(
            "{i} crossing edges exceed the {pairs} crossing pairs"
        )));
    }
    Ok(cut_error_distribution(model)?[i])
}

/// Expected number of true edges lost to an accepted cut.
pub fn expected_cut_error(model: &ErrorModel) -> Result<f64> {
    Ok(cut_error_distribution(model)?
        .iter()
        .enumerate()
        .map(|(i, p)| i as f64 * p)
        .sum())
}

/// `⌈n²·e·β / (4·f·(1 - α))⌉ + 1`, an upper bound on [`expected_cut_error`].
pub fn cut_error_bound(model: &ErrorModel) -> Result<u64> {
    let rho = model.crossing_odds()?;
    let n = model.n as f64;
    Ok((n * n * rho / 4.0).ceil() as u64 + 1)
}

/// Edge and non-edge pair counts of one split: `e1`/`f1` inside
/// `(V1 ∪ C)² - C²`, likewise `e2`/`f2`, and `ec`/`fc` inside `C²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionCounts {
    pub e1: f64,
    pub e2: f64,
    pub ec: f64,
    pub f1: f64,
    pub f2: f64,
    pub fc: f64,
}

impl PartitionCounts {
    /// Expected counts for the model's partition sizes when `lost` edges
    /// cross the cut: the cut set gets its uniform share of edges and the
    /// rest are split between the sides in proportion to their pair counts.
    pub fn expected(model: &ErrorModel, lost: f64) -> Result<Self> {
        model.validate()?;
        let ordered = |k: usize| (k * k.saturating_sub(1)) as f64;
        let total = ordered(model.n);
        let cc = ordered(model.nc);
        let ec = if total > 0.0 {
            model.e * cc / total
        } else {
            0.0
        };
        let p1 = ordered(model.n1 + model.nc) - cc;
        let p2 = ordered(model.n2 + model.nc) - cc;
        let rest = model.e - lost - ec;
        if rest < 0.0 {
            return Err(SadaError::InvalidArgument(format!(
                "{lost} lost edges leave no edges for the sides"
            )));
        }
        let share = if p1 + p2 > 0.0 { rest / (p1 + p2) } else { 0.0 };
        let (e1, e2) = (share * p1, share * p2);
        Ok(PartitionCounts {
            e1,
            e2,
            ec,
            f1: p1 - e1,
            f2: p2 - e2,
            fc: cc - ec,
        })
    }
}

/// Recall and false-edge rate of the solver on each subproblem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubproblemRates {
    pub recall1: f64,
    pub recall2: f64,
    pub false1: f64,
    pub false2: f64,
}

/// True and false edge counts after the plain union of both sub-results:
/// `e_m = e1·R1 + e2·R2 + ec·(R1 + R2 - R1·R2)` and `f_m` likewise.
pub fn merge_counts(counts: &PartitionCounts, rates: &SubproblemRates) -> (f64, f64) {
    let either = |a: f64, b: f64| a + b - a * b;
    let em = counts.e1 * rates.recall1
        + counts.e2 * rates.recall2
        + counts.ec * either(rates.recall1, rates.recall2);
    let fm = counts.f1 * rates.false1
        + counts.f2 * rates.false2
        + counts.fc * either(rates.false1, rates.false2);
    (em, fm)
}

/// Thresholds `(δ*, γ*)` above which merging cannot lower precision:
/// `δ* = P·fc·(r - r²) / ((1 - P)(e1 + e2 + ec))` and
/// `γ* = fc·r / (f1 + f2 + 2·fc)`.
pub fn merge_precision_thresholds(
    model: &ErrorModel,
    counts: &PartitionCounts,
) -> Result<(f64, f64)> {
    model.validate()?;
    let p = model.precision;
    let r = model.false_rate;
    let kept_edges = counts.e1 + counts.e2 + counts.ec;
    if p == 1.0 || kept_edges == 0.0 {
        return Err(SadaError::UndefinedModel(
            "delta threshold divides by zero (P = 1 or no edges)".into(),
        ));
    }
    let delta = p * counts.fc * (r - r * r) / ((1.0 - p) * kept_edges);
    let pairs = counts.f1 + counts.f2 + 2.0 * counts.fc;
    let gamma = if pairs > 0.0 {
        counts.fc * r / pairs
    } else {
        0.0
    };
    Ok((delta, gamma))
}

/// Whether the model's `delta` or `gamma` clears its threshold.
pub fn merge_precision_condition(model: &ErrorModel, counts: &PartitionCounts) -> Result<bool> {
    let (delta, gamma) = merge_precision_thresholds(model, counts)?;
    Ok(model.delta > delta || model.gamma > gamma)
}

/// Upper bound on true edges lost to conflict removal:
/// `ε·(2·n_c²·r + d²·n_c/n · (1 + d/n)^(n-2))`.
pub fn conflict_removed_bound(model: &ErrorModel) -> Result<f64> {
    model.validate()?;
    Ok(model.epsilon * model.removal_core())
}

/// Upper bound on true edges lost to redundancy removal:
/// `β·(2·n_c²·r + d²·n_c/n · (1 + d/n)^(n-2))`.
pub fn redundancy_removed_bound(model: &ErrorModel) -> Result<f64> {
    model.validate()?;
    Ok(model.beta * model.removal_core())
}

/// Smallest subproblem recall gain `δ` that guarantees the split does not
/// lower expected recall: the cut-error bound plus both removal bounds,
/// divided by `e`.
pub fn min_delta_for_recall(model: &ErrorModel) -> Result<f64> {
    if model.e <= 0.0 {
        return Err(SadaError::UndefinedModel(
            "e = 0: recall is undefined".into(),
        ));
    }
    let bound = cut_error_bound(model)? as f64;
    Ok((bound + (model.epsilon + model.beta) * model.removal_core()) / model.e)
}

/// Every quantity of the analysis for one model, as printed by the CLI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub model: ErrorModel,
    pub expected_cut_error: f64,
    pub cut_error_bound: u64,
    pub partition: PartitionCounts,
    pub delta_threshold: Option<f64>,
    pub gamma_threshold: Option<f64>,
    pub merge_precision_condition: Option<bool>,
    pub conflict_removed_bound: f64,
    pub redundancy_removed_bound: f64,
    pub min_delta_for_recall: f64,
}

impl BoundsReport {
    /// The partition counts assume the cut loses as many edges as the
    /// cut-error bound allows.
    pub fn compute(model: &ErrorModel) -> Result<Self> {
        let bound = cut_error_bound(model)?;
        let partition = PartitionCounts::expected(model, bound as f64)?;
        let thresholds = merge_precision_thresholds(model, &partition).ok();
        Ok(BoundsReport {
            model: model.clone(),
            expected_cut_error: expected_cut_error(model)?,
            cut_error_bound: bound,
            partition,
            delta_threshold: thresholds.map(|t| t.0),
            gamma_threshold: thresholds.map(|t| t.1),
            merge_precision_condition: thresholds.map(|(d, g)| model.delta > d || model.gamma > g),
            conflict_removed_bound: conflict_removed_bound(model)?,
            redundancy_removed_bound: redundancy_removed_bound(model)?,
            min_delta_for_recall: min_delta_for_recall(model)?,
        })
    }
}
