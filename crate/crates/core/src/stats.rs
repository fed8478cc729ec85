//! Two-sided rank tests with exact null distributions for small samples
//! and Bonferroni adjustment.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::metrics::midranks;

/// Largest number of nonzero differences handled by the exact Wilcoxon path.
pub const WILCOXON_EXACT_MAX: usize = 25;
/// Largest pooled sample handled by the exact Mann-Whitney path.
pub const MANN_WHITNEY_EXACT_MAX: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestMethod {
    WilcoxonExact,
    WilcoxonNormal,
    MannWhitneyExact,
    MannWhitneyNormal,
}

impl TestMethod {
    pub fn name(self) -> &'static str {
        match self {
            TestMethod::WilcoxonExact => "wilcoxon_exact",
            TestMethod::WilcoxonNormal => "wilcoxon_normal",
            TestMethod::MannWhitneyExact => "mann_whitney_exact",
            TestMethod::MannWhitneyNormal => "mann_whitney_normal",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    /// Nonzero differences for Wilcoxon, `[n_a, n_b]` for Mann-Whitney.
    pub n: Vec<usize>,
}

/// Two-sided tail probability of an observed value within an integer-valued
/// null distribution given as counts.
fn two_sided_exact(counts: &[u64], observed: usize, total: f64) -> f64 {
    let le: u64 = counts[..=observed].iter().sum();
    let ge: u64 = counts[observed..].iter().sum();
    (2.0 * le.min(ge) as f64 / total).min(1.0)
}

fn normal_two_sided(stat: f64, mean: f64, var: f64) -> f64 {
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((stat - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let sf = Normal::standard().sf(z);
    (2.0 * sf).min(1.0)
}

/// Tie correction term `Σ (t³ − t)` over groups of equal values in ranks.
fn tie_term(ranks: &[f64]) -> f64 {
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .chunk_by(|a, b| a == b)
        .map(|g| {
            let t = g.len() as f64;
            t * t * t - t
        })
        .sum()
}

/// Paired signed-rank test. Zero differences are dropped; the statistic is
/// `min(W⁺, W⁻)`.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<StatTestResult> {
    wilcoxon(x, y, false)
}

/// [`wilcoxon_signed_rank`] forced onto the normal approximation.
pub fn wilcoxon_signed_rank_normal(x: &[f64], y: &[f64]) -> Result<StatTestResult> {
    wilcoxon(x, y, true)
}

fn wilcoxon(x: &[f64], y: &[f64], force_normal: bool) -> Result<StatTestResult> {
    if x.len() != y.len() {
        return Err(Error::Length {
            what: "paired samples",
            expected: x.len(),
            got: y.len(),
        });
    }
    let d: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("differences must be finite".into()));
    }
    if d.is_empty() {
        return Err(Error::ZeroDifferences);
    }
    let n = d.len();
    let ranks = midranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let w_plus: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total_rank = (n * (n + 1)) as f64 / 2.0;
    let statistic = w_plus.min(total_rank - w_plus);

    let (p_value, method) = if n <= WILCOXON_EXACT_MAX && !force_normal {
        // doubled midranks are integers; counts[s] = sign patterns with 2W⁺ = s
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r) as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut counts = vec![0u64; max + 1];
        counts[0] = 1;
        let mut reach = 0;
        for &r in &doubled {
            for s in (0..=reach).rev() {
                counts[s + r] += counts[s];
            }
            reach += r;
        }
        let observed = (2.0 * w_plus) as usize;
        let total = (1u64 << n) as f64;
        (
            two_sided_exact(&counts, observed, total),
            TestMethod::WilcoxonExact,
        )
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term(&ranks) / 48.0;
        (
            normal_two_sided(w_plus, mean, var),
            TestMethod::WilcoxonNormal,
        )
    };
    Ok(StatTestResult {
        statistic,
        p_value,
        method,
        n: vec![n],
    })
}

/// Unpaired rank-sum test. The statistic is `U_a = R_a − n_a(n_a+1)/2`
/// over pooled midranks, so `U_a + U_b = n_a·n_b`.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<StatTestResult> {
    mann_whitney(a, b, false)
}

/// [`mann_whitney_u`] forced onto the normal approximation.
pub fn mann_whitney_u_normal(a: &[f64], b: &[f64]) -> Result<StatTestResult> {
    mann_whitney(a, b, true)
}

fn mann_whitney(a: &[f64], b: &[f64], force_normal: bool) -> Result<StatTestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Invalid(
            "Mann-Whitney needs two nonempty groups".into(),
        ));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("samples must be finite".into()));
    }
    let (na, nb) = (a.len(), b.len());
    let big_n = na + nb;
    let ranks = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let statistic = rank_sum_a - (na * (na + 1)) as f64 / 2.0;

    let (p_value, method) = if big_n <= MANN_WHITNEY_EXACT_MAX && !force_normal {
        // counts[m][s]: subsets of m pooled items whose doubled rank sum is s
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r) as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut counts = vec![vec![0u64; max + 1]; na + 1];
        counts[0][0] = 1;
        for &r in &doubled {
            for m in (1..=na).rev() {
                for s in (r..=max).rev() {
                    counts[m][s] += counts[m - 1][s - r];
                }
            }
        }
        let total: u64 = counts[na].iter().sum();
        let observed = (2.0 * rank_sum_a) as usize;
        (
            two_sided_exact(&counts[na], observed, total as f64),
            TestMethod::MannWhitneyExact,
        )
    } else {
        let (naf, nbf, nf) = (na as f64, nb as f64, big_n as f64);
        let mean = naf * nbf / 2.0;
        let var = naf * nbf / 12.0 * ((nf + 1.0) - tie_term(&ranks) / (nf * (nf - 1.0)));
        (
            normal_two_sided(statistic, mean, var),
            TestMethod::MannWhitneyNormal,
        )
    };
    Ok(StatTestResult {
        statistic,
        p_value,
        method,
        n: vec![na, nb],
    })
}

/// `min(1, p·m)` for each of the `m` p-values.
pub fn bonferroni(p_values: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Invalid(format!("p-value {bad} outside [0, 1]")));
    }
    let m = p_values.len() as f64;
    Ok(p_values.iter().map(|p| (p * m).min(1.0)).collect())
}
