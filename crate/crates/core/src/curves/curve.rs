use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PredictionOracle, TabularDataset};
use crate::numeric::{nearest_rank, nearest_rank_fraction};

pub const DEFAULT_POINTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    /// 1-based percentile index.
    pub percentile: usize,
    pub value: f64,
}

/// Nearest-rank percentiles at levels `k / n_points` for `k = 1..=n_points`.
/// Duplicate values are kept, so the grid always has `n_points` entries.
pub fn compute_percentile_grid(values: &[f64], n_points: usize) -> Result<Vec<GridPoint>> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("cannot build a percentile grid from no values".into()));
    }
    if n_points < 2 {
        return Err(Error::InvalidParameter("n_points must be >= 2".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((1..=n_points)
        .map(|k| GridPoint {
            percentile: k,
            value: nearest_rank_fraction(&sorted, k, n_points),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvePoint {
    pub percentile: usize,
    pub feature_value: f64,
    pub mean_risk: f64,
    pub std: f64,
    pub p10: f64,
    pub p90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskCurve {
    pub feature: String,
    pub points: Vec<CurvePoint>,
    pub eval_set_size: usize,
    /// Evaluation set had equal positive and negative counts.
    pub balanced: bool,
    pub oracle_kind: String,
}

impl RiskCurve {
    pub fn mean_risk(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean_risk).collect()
    }
}

fn summarize(point: GridPoint, mut scores: Vec<f64>) -> CurvePoint {
    // Sorting first makes the sums independent of row order.
    scores.sort_by(f64::total_cmp);
    let n = scores.len() as f64;
    // Offset from the minimum so identical scores average to exactly that score.
    let min = scores[0];
    let mean = min + scores.iter().map(|s| s - min).sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    CurvePoint {
        percentile: point.percentile,
        feature_value: point.value,
        mean_risk: mean,
        std: var.sqrt(),
        p10: nearest_rank(&scores, 0.1),
        p90: nearest_rank(&scores, 0.9),
    }
}

/// For each grid value, overrides `feature` in every evaluation row, queries
/// the oracle, and records the mean score with its spread.
///
/// The grid comes from the evaluation set's own distribution of `feature`.
pub fn feature_risk_curve(
    oracle: &dyn PredictionOracle,
    eval_set: &TabularDataset,
    feature: &str,
    n_points: usize,
) -> Result<RiskCurve> {
    let j = eval_set.feature_index(feature)?;
    if oracle.feature_names() != eval_set.feature_names() {
        return Err(Error::InvalidParameter(
            "oracle feature names do not match the evaluation set".into(),
        ));
    }
    if eval_set.is_empty() {
        return Err(Error::InvalidParameter("empty evaluation set".into()));
    }
    let grid = compute_percentile_grid(&eval_set.column(j), n_points)?;

    let sweep = |g: &GridPoint| {
        let mut x = Vec::with_capacity(eval_set.n_features());
        let scores = eval_set
            .rows()
            .iter()
            .map(|row| {
                x.clear();
                x.extend_from_slice(row);
                x[j] = g.value;
                oracle.score(&x)
            })
            .collect();
        summarize(*g, scores)
    };
    #[cfg(feature = "parallel")]
    let points = {
        use rayon::prelude::*;
        grid.par_iter().map(sweep).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let points = grid.iter().map(sweep).collect();

    Ok(RiskCurve {
        feature: feature.to_string(),
        points,
        eval_set_size: eval_set.n_rows(),
        balanced: 2 * eval_set.positives() == eval_set.n_rows(),
        oracle_kind: oracle.kind().to_string(),
    })
}
