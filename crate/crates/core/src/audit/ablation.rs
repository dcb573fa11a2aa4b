use serde::{Deserialize, Serialize};

use crate::audit::metrics::{group_metrics_from_scores, GroupMetricsTable};
use crate::error::Result;
use crate::model::cv::{forest_out_of_fold_scores, stratified_folds};
use crate::model::{ForestParams, TabularDataset};
use crate::rng::{derive_seed, stream};

/// Per-group change when the feature is removed (`without - with`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDelta {
    pub group: String,
    pub accuracy: Option<f64>,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationResult {
    pub feature: String,
    pub folds: usize,
    pub metrics_with: GroupMetricsTable,
    pub metrics_without: GroupMetricsTable,
    pub deltas: Vec<GroupDelta>,
}

/// Cross-validates the model with and without `feature` on the same folds and
/// seeds, and reports the per-group metric deltas on out-of-fold predictions.
pub fn feature_ablation_delta(
    dataset: &TabularDataset,
    feature: &str,
    params: &ForestParams,
    seed: u64,
    k: usize,
    threshold: f64,
) -> Result<AblationResult> {
    dataset.require_groups()?;
    let reduced = dataset.without_feature(feature)?;
    let seed = derive_seed(seed, stream::ABLATION);
    let folds = stratified_folds(dataset.labels(), k, seed)?;
    let with_scores = forest_out_of_fold_scores(dataset, &folds, params, seed)?;
    let without_scores = forest_out_of_fold_scores(&reduced, &folds, params, seed)?;
    let metrics_with = group_metrics_from_scores(dataset, &with_scores, threshold)?;
    let metrics_without = group_metrics_from_scores(dataset, &without_scores, threshold)?;
    let diff = |a: Option<f64>, b: Option<f64>| a.zip(b).map(|(w, wo)| wo - w);
    let deltas = metrics_with
        .groups
        .iter()
        .zip(&metrics_without.groups)
        .map(|(w, wo)| GroupDelta {
            group: w.group.clone(),
            accuracy: diff(w.accuracy, wo.accuracy),
            tpr: diff(w.tpr, wo.tpr),
            tnr: diff(w.tnr, wo.tnr),
        })
        .collect();
    Ok(AblationResult {
        feature: feature.to_string(),
        folds: k,
        metrics_with,
        metrics_without,
        deltas,
    })
}
