use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::audit::disparity::disparity_detail;
use crate::audit::metrics::{group_metrics_from_scores, GroupMetricsTable, MetricName};
use crate::error::{Error, Result};
use crate::model::oracle::RowScorer;
use crate::model::TabularDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Improved,
    Worsened,
    Unchanged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterventionVerdict {
    Improved,
    NotImproved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupShift {
    pub group: String,
    pub before: f64,
    pub after: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionReport {
    pub candidate: String,
    pub priority_metric: MetricName,
    pub groups: Vec<String>,
    pub baseline_disparity: f64,
    pub intervention_disparity: f64,
    /// `1 - after / before`; `None` when the baseline has no disparity.
    pub relative_reduction: Option<f64>,
    pub baseline_accuracy: f64,
    pub intervention_accuracy: f64,
    pub accuracy_delta: f64,
    pub per_group: Vec<GroupShift>,
    /// Disparity narrowed only because the favoured group got worse.
    pub narrowed_by_worsening: bool,
    pub verdict: InterventionVerdict,
}

pub fn relative_reduction(before: f64, after: f64) -> Option<f64> {
    (before != 0.0).then(|| 1.0 - after / before)
}

impl InterventionReport {
    /// Compares two metric tables over the same evaluation rows.
    pub fn from_tables<S: AsRef<str>>(
        candidate: &str,
        baseline: &GroupMetricsTable,
        intervention: &GroupMetricsTable,
        metric: MetricName,
        groups: &[S],
    ) -> Result<Self> {
        let selected: Vec<String> = if groups.is_empty() {
            baseline.groups.iter().map(|g| g.group.clone()).collect()
        } else {
            groups.iter().map(|g| g.as_ref().to_string()).collect()
        };
        let mut per_group = Vec::with_capacity(selected.len());
        for g in &selected {
            let undefined = || Error::UndefinedMetric {
                metric: metric.to_string(),
                group: g.clone(),
            };
            let before = baseline.value(g, metric)?.ok_or_else(undefined)?;
            let after = intervention.value(g, metric)?.ok_or_else(undefined)?;
            let direction = if after > before {
                Direction::Improved
            } else if after < before {
                Direction::Worsened
            } else {
                Direction::Unchanged
            };
            per_group.push(GroupShift {
                group: g.clone(),
                before,
                after,
                direction,
            });
        }
        let base = disparity_detail(baseline, metric, &selected)?;
        let after = disparity_detail(intervention, metric, &selected)?;
        let verdict = if after.value < base.value {
            InterventionVerdict::Improved
        } else {
            InterventionVerdict::NotImproved
        };
        let favoured_worsened = per_group
            .iter()
            .any(|s| s.group == base.highest && s.direction == Direction::Worsened);
        let none_improved = per_group.iter().all(|s| s.direction != Direction::Improved);
        let acc = |t: &GroupMetricsTable| t.overall.accuracy.unwrap_or(f64::NAN);
        Ok(Self {
            candidate: candidate.to_string(),
            priority_metric: metric,
            groups: selected,
            baseline_disparity: base.value,
            intervention_disparity: after.value,
            relative_reduction: relative_reduction(base.value, after.value),
            baseline_accuracy: acc(baseline),
            intervention_accuracy: acc(intervention),
            accuracy_delta: acc(intervention) - acc(baseline),
            per_group,
            narrowed_by_worsening: verdict == InterventionVerdict::Improved && favoured_worsened && none_improved,
            verdict,
        })
    }
}

/// Reports for candidates given their scores on the same evaluation rows.
pub fn compare_intervention_scores<S: AsRef<str>>(
    baseline_scores: &[f64],
    candidates: &[(String, Vec<f64>)],
    dataset: &TabularDataset,
    priority_metric: MetricName,
    groups: &[S],
    threshold: f64,
) -> Result<Vec<InterventionReport>> {
    let base = group_metrics_from_scores(dataset, baseline_scores, threshold)?;
    candidates
        .iter()
        .map(|(name, scores)| {
            let table = group_metrics_from_scores(dataset, scores, threshold)?;
            InterventionReport::from_tables(name, &base, &table, priority_metric, groups)
        })
        .collect()
}

/// `dataset` must be disjoint from every model's training rows.
pub fn compare_interventions<S: AsRef<str>>(
    baseline: &dyn RowScorer,
    candidates: &[(&str, &dyn RowScorer)],
    dataset: &TabularDataset,
    priority_metric: MetricName,
    groups: &[S],
    threshold: f64,
) -> Result<Vec<InterventionReport>> {
    let scored: Vec<(String, Vec<f64>)> = candidates
        .iter()
        .map(|(name, m)| (name.to_string(), m.score_all(dataset)))
        .collect();
    compare_intervention_scores(&baseline.score_all(dataset), &scored, dataset, priority_metric, groups, threshold)
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

/// Standalone Markdown comparison table.
pub fn reports_to_markdown(reports: &[InterventionReport]) -> String {
    let mut out = String::new();
    out.push_str("| Candidate | Metric | Disparity before | Disparity after | Relative reduction | Accuracy before | Accuracy after | Per-group | Verdict |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|\n");
    for r in reports {
        let per_group = r
            .per_group
            .iter()
            .map(|s| format!("{}: {} → {}", s.group, pct(s.before), pct(s.after)))
            .collect::<Vec<_>>()
            .join(", ");
        let mut verdict = match r.verdict {
            InterventionVerdict::Improved => "improved".to_string(),
            InterventionVerdict::NotImproved => "not improved".to_string(),
        };
        if r.narrowed_by_worsening {
            verdict.push_str(" (only by worsening the favoured group)");
        }
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            r.candidate,
            r.priority_metric,
            pct(r.baseline_disparity),
            pct(r.intervention_disparity),
            r.relative_reduction.map_or("n/a".to_string(), |x| format!("{:.0}%", 100.0 * x)),
            pct(r.baseline_accuracy),
            pct(r.intervention_accuracy),
            per_group,
            verdict,
        );
    }
    out
}
