use serde::{Deserialize, Serialize};

use crate::audit::metrics::{GroupMetricsTable, MetricName};
use crate::audit::tolerance::ToleranceThreshold;
use crate::error::Result;

/// Outcome of comparing one metric between two groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditFinding {
    pub metric: MetricName,
    pub groups: [String; 2],
    pub values: [Option<f64>; 2],
    /// Absolute difference, `None` if either group's metric is undefined.
    pub disparity: Option<f64>,
    pub threshold: ToleranceThreshold,
    pub exceeded: bool,
    /// Group with the higher value, `None` on a tie or undefined metric.
    pub favoured: Option<String>,
}

/// One finding per (threshold metric, group pair); pairs follow category order.
///
/// A finding is exceeded iff the disparity is strictly greater than the half-width.
pub fn evaluate_bias<S: AsRef<str>>(
    table: &GroupMetricsTable,
    thresholds: &[ToleranceThreshold],
    groups: &[S],
) -> Result<Vec<AuditFinding>> {
    let selected: Vec<String> = if groups.is_empty() {
        table.groups.iter().map(|g| g.group.clone()).collect()
    } else {
        groups.iter().map(|g| g.as_ref().to_string()).collect()
    };
    let mut findings = Vec::new();
    for t in thresholds {
        for i in 0..selected.len() {
            for j in i + 1..selected.len() {
                let (a, b) = (&selected[i], &selected[j]);
                let va = table.value(a, t.metric)?;
                let vb = table.value(b, t.metric)?;
                let disparity = va.zip(vb).map(|(x, y)| (x - y).abs());
                let favoured = match va.zip(vb) {
                    Some((x, y)) if x > y => Some(a.clone()),
                    Some((x, y)) if y > x => Some(b.clone()),
                    _ => None,
                };
                findings.push(AuditFinding {
                    metric: t.metric,
                    groups: [a.clone(), b.clone()],
                    values: [va, vb],
                    disparity,
                    threshold: *t,
                    exceeded: disparity.is_some_and(|d| d > t.half_width),
                    favoured,
                });
            }
        }
    }
    Ok(findings)
}

pub fn any_exceeded(findings: &[AuditFinding]) -> bool {
    findings.iter().any(|f| f.exceeded)
}
