//! Per-group confusion counts and the rates derived from them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::oracle::RowScorer;
use crate::model::TabularDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    Tpr,
    Tnr,
    Accuracy,
}

impl MetricName {
    pub const ALL: [MetricName; 3] = [MetricName::Tpr, MetricName::Tnr, MetricName::Accuracy];

    pub fn label(&self) -> &'static str {
        match self {
            MetricName::Tpr => "TPR",
            MetricName::Tnr => "TNR",
            MetricName::Accuracy => "accuracy",
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for MetricName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tpr" => Ok(MetricName::Tpr),
            "tnr" => Ok(MetricName::Tnr),
            "accuracy" => Ok(MetricName::Accuracy),
            other => Err(Error::InvalidParameter(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }

    /// `None` when there are no positive labels.
    pub fn tpr(&self) -> Option<f64> {
        ratio(self.tp, self.positives())
    }

    /// `None` when there are no negative labels.
    pub fn tnr(&self) -> Option<f64> {
        ratio(self.tn, self.negatives())
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn metric(&self, metric: MetricName) -> Option<f64> {
        match metric {
            MetricName::Tpr => self.tpr(),
            MetricName::Tnr => self.tnr(),
            MetricName::Accuracy => self.accuracy(),
        }
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Metrics for one group. Rates are `None` ("undefined") rather than 0/0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupMetrics {
    pub group: String,
    pub support: usize,
    pub outcome_rate: Option<f64>,
    pub counts: ConfusionCounts,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub accuracy: Option<f64>,
}

impl GroupMetrics {
    pub fn from_counts(group: String, counts: ConfusionCounts) -> Self {
        Self {
            group,
            support: counts.total(),
            outcome_rate: ratio(counts.positives(), counts.total()),
            tpr: counts.tpr(),
            tnr: counts.tnr(),
            accuracy: counts.accuracy(),
            counts,
        }
    }

    pub fn metric(&self, metric: MetricName) -> Option<f64> {
        match metric {
            MetricName::Tpr => self.tpr,
            MetricName::Tnr => self.tnr,
            MetricName::Accuracy => self.accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupMetricsTable {
    pub attribute: String,
    pub threshold: f64,
    /// One entry per declared category, in category order.
    pub groups: Vec<GroupMetrics>,
    pub overall: GroupMetrics,
}

impl GroupMetricsTable {
    pub fn get(&self, group: &str) -> Option<&GroupMetrics> {
        self.groups.iter().find(|g| g.group == group)
    }

    pub fn value(&self, group: &str, metric: MetricName) -> Result<Option<f64>> {
        self.get(group)
            .map(|g| g.metric(metric))
            .ok_or_else(|| Error::UnknownGroup(group.to_string()))
    }
}

/// Builds the table from precomputed scores (one per dataset row).
pub fn group_metrics_from_scores(dataset: &TabularDataset, scores: &[f64], threshold: f64) -> Result<GroupMetricsTable> {
    let groups = dataset.require_groups()?;
    if scores.len() != dataset.n_rows() {
        return Err(Error::InvalidParameter(format!(
            "{} scores for {} rows",
            scores.len(),
            dataset.n_rows()
        )));
    }
    let predictions: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
    let mut table = group_metrics_from_predictions(&predictions, dataset.labels(), &groups.codes, &groups.categories)?;
    table.attribute = groups.name.clone();
    table.threshold = threshold;
    Ok(table)
}

/// Group metrics from raw predicted/actual labels and group codes.
pub fn group_metrics_from_predictions(
    predictions: &[bool],
    labels: &[bool],
    codes: &[usize],
    categories: &[String],
) -> Result<GroupMetricsTable> {
    if predictions.len() != labels.len() || labels.len() != codes.len() {
        return Err(Error::InvalidParameter("predictions, labels and groups differ in length".into()));
    }
    let mut per_group = vec![ConfusionCounts::default(); categories.len()];
    let mut overall = ConfusionCounts::default();
    for ((&p, &y), &g) in predictions.iter().zip(labels).zip(codes) {
        let counts = per_group
            .get_mut(g)
            .ok_or_else(|| Error::InvalidParameter(format!("group code {g} outside category set")))?;
        counts.add(p, y);
        overall.add(p, y);
    }
    Ok(GroupMetricsTable {
        attribute: String::new(),
        threshold: f64::NAN,
        groups: categories
            .iter()
            .zip(per_group)
            .map(|(c, counts)| GroupMetrics::from_counts(c.clone(), counts))
            .collect(),
        overall: GroupMetrics::from_counts("all".into(), overall),
    })
}

/// Scores every row with `oracle` and tabulates per-group metrics.
pub fn compute_group_metrics(
    oracle: &dyn RowScorer,
    dataset: &TabularDataset,
    threshold: f64,
) -> Result<GroupMetricsTable> {
    dataset.require_groups()?;
    let scores = oracle.score_all(dataset);
    group_metrics_from_scores(dataset, &scores, threshold)
}
