use serde::{Deserialize, Serialize};

use crate::audit::metrics::{GroupMetricsTable, MetricName};
use crate::error::{Error, Result};

/// Largest pairwise gap of one metric over a group selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disparity {
    pub metric: MetricName,
    pub value: f64,
    pub highest: String,
    pub lowest: String,
}

/// Selected groups with a defined value for `metric`. An empty selection means all groups.
pub(crate) fn defined_values<S: AsRef<str>>(
    table: &GroupMetricsTable,
    metric: MetricName,
    groups: &[S],
) -> Result<Vec<(String, f64)>> {
    let names: Vec<String> = if groups.is_empty() {
        table.groups.iter().map(|g| g.group.clone()).collect()
    } else {
        groups.iter().map(|g| g.as_ref().to_string()).collect()
    };
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        if let Some(v) = table.value(&name, metric)? {
            out.push((name, v));
        }
    }
    Ok(out)
}

pub fn disparity_detail<S: AsRef<str>>(table: &GroupMetricsTable, metric: MetricName, groups: &[S]) -> Result<Disparity> {
    let values = defined_values(table, metric, groups)?;
    if values.len() < 2 {
        return Err(Error::TooFewGroups(metric.to_string()));
    }
    let (hi, lo) = values.iter().fold((&values[0], &values[0]), |(hi, lo), v| {
        (if v.1 > hi.1 { v } else { hi }, if v.1 < lo.1 { v } else { lo })
    });
    Ok(Disparity {
        metric,
        value: hi.1 - lo.1,
        highest: hi.0.clone(),
        lowest: lo.0.clone(),
    })
}

/// Maximum pairwise absolute difference of `metric` across `groups`.
pub fn compute_disparity<S: AsRef<str>>(table: &GroupMetricsTable, metric: MetricName, groups: &[S]) -> Result<f64> {
    disparity_detail(table, metric, groups).map(|d| d.value)
}
