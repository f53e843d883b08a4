//! Shared test-statistic helpers.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper-tail chi-square probability; zero degrees of freedom means no
/// evidence against independence.
pub fn chi2_sf(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    dist.sf(stat).clamp(0.0, 1.0)
}

/// G² statistic and degrees of freedom for a stack of `k × k` contingency
/// tables laid out as `counts[(stratum * k + a) * k + b]`.
///
/// Empty cells contribute nothing; every non-empty stratum contributes
/// `(rows - 1)(cols - 1)` degrees of freedom over its non-empty rows and
/// columns.
pub fn g_squared(counts: &[u32], k: usize) -> (f64, usize) {
    let mut g2 = 0.0;
    let mut df = 0usize;
    let mut rows = vec![0u32; k];
    let mut cols = vec![0u32; k];
    for table in counts.chunks_exact(k * k) {
        rows.iter_mut().for_each(|x| *x = 0);
        cols.iter_mut().for_each(|x| *x = 0);
        for a in 0..k {
            for b in 0..k {
                let c = table[a * k + b];
                rows[a] += c;
                cols[b] += c;
            }
        }
        let total: u32 = rows.iter().sum();
        if total == 0 {
            continue;
        }
        let nr = rows.iter().filter(|&&x| x > 0).count();
        let nc = cols.iter().filter(|&&x| x > 0).count();
        df += (nr - 1) * (nc - 1);
        for a in 0..k {
            for b in 0..k {
                let o = table[a * k + b];
                if o > 0 {
                    let expected = rows[a] as f64 * cols[b] as f64 / total as f64;
                    g2 += 2.0 * o as f64 * (o as f64 / expected).ln();
                }
            }
        }
    }
    (g2.max(0.0), df)
}

/// Unconditional G² test of two discrete code vectors over `k` states.
pub fn g_squared_pair(a: &[u32], b: &[u32], k: usize) -> (f64, usize) {
    let mut counts = vec![0u32; k * k];
    for (&x, &y) in a.iter().zip(b) {
        counts[x as usize * k + y as usize] += 1;
    }
    g_squared(&counts, k)
}
