//! Stratified k-fold cross-validation.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::audit::metrics::ConfusionCounts;
use crate::error::{Error, Result};
use crate::model::dataset::TabularDataset;
use crate::model::forest::{train_random_forest, ForestParams};
use crate::model::oracle::RowScorer;
use crate::rng::{derive_seed, rng_from_seed, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldMetrics {
    pub fold: usize,
    /// `None` when the held-out fold has no positives.
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub accuracy: f64,
    pub held_out: Vec<usize>,
}

/// Splits row indices into `k` disjoint folds, stratified by label.
///
/// Positives and negatives are shuffled separately and dealt round-robin, so
/// fold sizes and per-fold positive counts each differ by at most one.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    if k < 2 {
        return Err(Error::InvalidParameter("k must be >= 2".into()));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds row count {n}")));
    }
    let mut rng = rng_from_seed(derive_seed(seed, stream::FOLDS));
    let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..n).filter(|&i| !labels[i]).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (i, row) in pos.into_iter().chain(neg).enumerate() {
        folds[i % k].push(row);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Out-of-fold scores: each row is scored by the model trained without its fold.
pub fn out_of_fold_scores<F>(dataset: &TabularDataset, folds: &[Vec<usize>], mut train: F) -> Result<Vec<f64>>
where
    F: FnMut(&TabularDataset, usize) -> Result<Box<dyn RowScorer>>,
{
    let n = dataset.n_rows();
    let mut fold_of = vec![usize::MAX; n];
    for (f, rows) in folds.iter().enumerate() {
        for &r in rows {
            fold_of[r] = f;
        }
    }
    let mut scores = vec![f64::NAN; n];
    for (f, held_out) in folds.iter().enumerate() {
        let train_rows: Vec<usize> = (0..n).filter(|&r| fold_of[r] != f).collect();
        let model = train(&dataset.subset(&train_rows), f)?;
        for &r in held_out {
            scores[r] = model.score_row(dataset, r);
        }
    }
    Ok(scores)
}

/// Per-fold metrics computed on held-out rows only.
pub fn fold_metrics(dataset: &TabularDataset, folds: &[Vec<usize>], scores: &[f64], threshold: f64) -> Vec<FoldMetrics> {
    folds
        .iter()
        .enumerate()
        .map(|(fold, rows)| {
            let mut c = ConfusionCounts::default();
            for &r in rows {
                c.add(scores[r] >= threshold, dataset.label(r));
            }
            FoldMetrics {
                fold,
                tpr: c.tpr(),
                tnr: c.tnr(),
                accuracy: c.accuracy().unwrap_or(f64::NAN),
                held_out: rows.clone(),
            }
        })
        .collect()
}

/// Seed for the model trained on all folds except `fold`.
pub fn fold_model_seed(seed: u64, fold: usize) -> u64 {
    derive_seed(seed, stream::FOLD_MODEL + fold as u64)
}

/// Out-of-fold random-forest scores over precomputed folds.
pub fn forest_out_of_fold_scores(
    dataset: &TabularDataset,
    folds: &[Vec<usize>],
    params: &ForestParams,
    seed: u64,
) -> Result<Vec<f64>> {
    out_of_fold_scores(dataset, folds, |train, f| {
        Ok(Box::new(train_random_forest(train, params, fold_model_seed(seed, f))?))
    })
}

pub fn k_fold_cross_validate(
    dataset: &TabularDataset,
    k: usize,
    params: &ForestParams,
    threshold: f64,
    seed: u64,
) -> Result<Vec<FoldMetrics>> {
    if dataset.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let folds = stratified_folds(dataset.labels(), k, seed)?;
    let scores = forest_out_of_fold_scores(dataset, &folds, params, seed)?;
    Ok(fold_metrics(dataset, &folds, &scores, threshold))
}
