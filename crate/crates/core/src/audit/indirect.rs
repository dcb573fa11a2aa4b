//! Model-matched indirect identification: can the same model class recover
//! the protected attribute from the audited model's input features?

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::cv::{forest_out_of_fold_scores, stratified_folds};
use crate::model::{ForestParams, TabularDataset};
use crate::rng::{derive_seed, stream};

pub const DEFAULT_UPLIFT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentificationVerdict {
    Identifiable,
    NotIdentifiable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndirectIdentificationReport {
    pub attribute: String,
    /// Categories with nonzero support that took part in the test.
    pub categories: Vec<String>,
    pub folds: usize,
    /// Cross-validated accuracy of the attribute classifier.
    pub accuracy: f64,
    /// Share of the largest category.
    pub baseline_accuracy: f64,
    pub uplift: f64,
    pub uplift_threshold: f64,
    pub verdict: IdentificationVerdict,
}

/// Trains forests with the audited model's hyperparameters to predict the
/// group attribute and compares their cross-validated accuracy against
/// always guessing the largest category.
///
/// Two categories use one classifier for the largest category; more use one
/// classifier per category (one-vs-rest) and predict the highest score.
pub fn indirect_identification_test(
    dataset: &TabularDataset,
    params: &ForestParams,
    seed: u64,
    k: usize,
    uplift_threshold: f64,
) -> Result<IndirectIdentificationReport> {
    let groups = dataset.require_groups()?;
    let supports = groups.supports();
    let present: Vec<usize> = (0..supports.len()).filter(|&c| supports[c] > 0).collect();
    let largest = *present
        .iter()
        .max_by(|&&a, &&b| supports[a].cmp(&supports[b]).then(b.cmp(&a)))
        .ok_or(Error::EmptyTrainingSet)?;
    if present.len() < 2 {
        return Err(Error::SingleCategory(groups.category(largest).to_string()));
    }

    let n = dataset.n_rows();
    let seed = derive_seed(seed, stream::INDIRECT);
    let is_largest: Vec<bool> = groups.codes.iter().map(|&c| c == largest).collect();
    let folds = stratified_folds(&is_largest, k, seed)?;
    let ungrouped = dataset.clone().without_groups();

    let predicted: Vec<usize> = if present.len() == 2 {
        let other = present.iter().copied().find(|&c| c != largest).unwrap();
        let target = ungrouped.with_labels(is_largest.clone())?;
        let scores = forest_out_of_fold_scores(&target, &folds, params, seed)?;
        scores.iter().map(|&s| if s >= 0.5 { largest } else { other }).collect()
    } else {
        let mut best = vec![(f64::NEG_INFINITY, usize::MAX); n];
        for &c in &present {
            let labels = groups.codes.iter().map(|&g| g == c).collect();
            let target = ungrouped.with_labels(labels)?;
            let scores = forest_out_of_fold_scores(&target, &folds, params, derive_seed(seed, c as u64))?;
            for (b, s) in best.iter_mut().zip(scores) {
                // strict: ties keep the lower category code
                if s > b.0 {
                    *b = (s, c);
                }
            }
        }
        best.into_iter().map(|(_, c)| c).collect()
    };

    let correct = predicted.iter().zip(&groups.codes).filter(|(p, g)| p == g).count();
    let accuracy = correct as f64 / n as f64;
    let baseline_accuracy = supports[largest] as f64 / n as f64;
    let uplift = accuracy - baseline_accuracy;
    Ok(IndirectIdentificationReport {
        attribute: groups.name.clone(),
        categories: present.iter().map(|&c| groups.category(c).to_string()).collect(),
        folds: k,
        accuracy,
        baseline_accuracy,
        uplift,
        uplift_threshold,
        verdict: if uplift > uplift_threshold {
            IdentificationVerdict::Identifiable
        } else {
            IdentificationVerdict::NotIdentifiable
        },
    })
}
