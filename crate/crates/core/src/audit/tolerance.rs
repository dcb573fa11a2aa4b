use serde::{Deserialize, Serialize};

use crate::audit::metrics::MetricName;
use crate::error::{Error, Result};
use crate::model::cv::FoldMetrics;
use crate::numeric::round_sig;

pub const DEFAULT_HALF_WIDTH: f64 = 0.02;
pub const MIN_DERIVED_HALF_WIDTH: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdProvenance {
    Configured,
    DerivedFromCv,
}

/// Allowed band for between-group differences of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceThreshold {
    pub metric: MetricName,
    pub half_width: f64,
    pub provenance: ThresholdProvenance,
}

impl ToleranceThreshold {
    pub fn configured(metric: MetricName, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::InvalidParameter("half-width must be > 0".into()));
        }
        Ok(Self {
            metric,
            half_width,
            provenance: ThresholdProvenance::Configured,
        })
    }
}

/// Half of the across-fold range of `metric`, floored at 0.005.
///
/// The result is rounded to 9 significant digits, the precision at which
/// ledgers store it.
pub fn derive_tolerance_from_cv(folds: &[FoldMetrics], metric: MetricName) -> Result<ToleranceThreshold> {
    let values: Vec<f64> = folds
        .iter()
        .filter_map(|f| match metric {
            MetricName::Tpr => f.tpr,
            MetricName::Tnr => f.tnr,
            MetricName::Accuracy => Some(f.accuracy).filter(|a| a.is_finite()),
        })
        .collect();
    if values.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two folds with a defined {metric}, found {}",
            values.len()
        )));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ToleranceThreshold {
        metric,
        half_width: round_sig((max - min) / 2.0, 9).max(MIN_DERIVED_HALF_WIDTH),
        provenance: ThresholdProvenance::DerivedFromCv,
    })
}
