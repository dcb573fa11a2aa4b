use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::numeric::round_sig;

const PROPORTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiSquaredResult {
    pub statistic: f64,
    /// Survival function of the statistic, to 6 significant figures.
    pub p_value: f64,
    pub degrees_of_freedom: usize,
}

/// Pearson goodness-of-fit of observed group counts against benchmark proportions.
pub fn chi_squared_group_benchmark(observed: &[u64], benchmark: &[f64]) -> Result<ChiSquaredResult> {
    if observed.len() != benchmark.len() {
        return Err(Error::InvalidParameter(format!(
            "{} observed groups but {} benchmark proportions",
            observed.len(),
            benchmark.len()
        )));
    }
    if observed.len() < 2 {
        return Err(Error::InvalidParameter("need at least two groups".into()));
    }
    let sum: f64 = benchmark.iter().sum();
    if (sum - 1.0).abs() > PROPORTION_TOLERANCE {
        return Err(Error::InvalidParameter(format!("benchmark proportions sum to {sum}, not 1")));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("total observed count is zero".into()));
    }
    let mut statistic = 0.0;
    for (i, (&o, &p)) in observed.iter().zip(benchmark).enumerate() {
        let expected = p * total as f64;
        if !(expected > 0.0) {
            return Err(Error::ZeroExpectedCount(i));
        }
        let d = o as f64 - expected;
        statistic += d * d / expected;
    }
    let dof = observed.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(ChiSquaredResult {
        statistic,
        p_value: round_sig(dist.sf(statistic), 6),
        degrees_of_freedom: dof,
    })
}

/// Scales non-negative weights to proportions summing to one.
pub fn normalize_proportions(weights: &[f64]) -> Result<Vec<f64>> {
    let sum: f64 = weights.iter().sum();
    if !(sum > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidParameter("benchmark weights must be non-negative with a positive sum".into()));
    }
    Ok(weights.iter().map(|w| w / sum).collect())
}
