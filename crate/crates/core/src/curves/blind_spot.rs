use crate::error::{Error, Result};
use crate::model::{PredictionOracle, TabularDataset};
use crate::numeric::nearest_rank;

/// Rows at or above the `intensity_percentile` of `feature` that the model
/// nevertheless scores below `threshold`.
pub fn flag_blind_spot_players(
    dataset: &TabularDataset,
    oracle: &dyn PredictionOracle,
    feature: &str,
    intensity_percentile: f64,
    threshold: f64,
) -> Result<Vec<usize>> {
    if !(intensity_percentile > 0.0 && intensity_percentile < 1.0) {
        return Err(Error::InvalidParameter("intensity percentile must be in (0, 1)".into()));
    }
    let j = dataset.feature_index(feature)?;
    if dataset.is_empty() {
        return Ok(Vec::new());
    }
    let mut sorted = dataset.column(j);
    sorted.sort_by(f64::total_cmp);
    let cutoff = nearest_rank(&sorted, intensity_percentile);
    Ok((0..dataset.n_rows())
        .filter(|&i| dataset.row(i)[j] >= cutoff && oracle.score(dataset.row(i)) < threshold)
        .collect())
}
