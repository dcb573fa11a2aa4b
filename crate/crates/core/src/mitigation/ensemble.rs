//! Blind-separate ensemble: one model per group, queried without the group.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::oracle::{feature_row_scorer, PredictionOracle};
use crate::model::{train_random_forest, ForestParams, RandomForestModel, TabularDataset};
use crate::rng::{derive_seed, stream};

pub const DEFAULT_MIN_GROUP_SUPPORT: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub group: String,
    /// Undersized categories whose rows were folded into this member.
    pub merged: Vec<String>,
    pub rows: usize,
    pub seed: u64,
    pub model: RandomForestModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlindSeparateEnsemble {
    feature_names: Vec<String>,
    min_group_support: usize,
    members: Vec<EnsembleMember>,
    /// Categories left out entirely: undersized, and the unspecified pool they
    /// would merge into is itself below the minimum.
    excluded: Vec<String>,
}

impl BlindSeparateEnsemble {
    pub fn members(&self) -> &[EnsembleMember] {
        &self.members
    }

    pub fn excluded(&self) -> &[String] {
        &self.excluded
    }

    pub fn min_group_support(&self) -> usize {
        self.min_group_support
    }

    pub fn member_scores(&self, features: &[f64]) -> Vec<f64> {
        self.members.iter().map(|m| m.model.score(features)).collect()
    }

    /// Highest member score. Never reads a group attribute.
    pub fn predict_max_risk(&self, features: &[f64]) -> f64 {
        self.members
            .iter()
            .map(|m| m.model.score(features))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl PredictionOracle for BlindSeparateEnsemble {
    fn score(&self, features: &[f64]) -> f64 {
        self.predict_max_risk(features)
    }

    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn kind(&self) -> &'static str {
        "blind_separate_ensemble"
    }
}

feature_row_scorer!(BlindSeparateEnsemble);

/// Trains one forest per category on that category's rows only.
///
/// Categories below `min_group_support` are merged into the unspecified
/// category's member. If that pooled member is still below the minimum its
/// rows are excluded and recorded.
pub fn train_blind_separate(
    dataset: &TabularDataset,
    params: &ForestParams,
    seed: u64,
    min_group_support: usize,
) -> Result<BlindSeparateEnsemble> {
    let groups = dataset.require_groups()?;
    let supports = groups.supports();
    if !supports.iter().any(|&s| s >= min_group_support.max(1)) {
        return Err(Error::InsufficientGroupData(min_group_support));
    }
    let unspecified = groups.unspecified;
    let undersized: Vec<usize> = (0..supports.len())
        .filter(|&c| c != unspecified && supports[c] > 0 && supports[c] < min_group_support)
        .collect();

    let mut plan: Vec<(usize, Vec<usize>)> = (0..supports.len())
        .filter(|&c| c != unspecified && supports[c] >= min_group_support)
        .map(|c| (c, vec![c]))
        .collect();
    let mut pool = vec![unspecified];
    pool.extend(&undersized);
    let pool_rows: usize = pool.iter().map(|&c| supports[c]).sum();
    let mut excluded = Vec::new();
    if pool_rows >= min_group_support.max(1) {
        plan.push((unspecified, pool));
    } else {
        excluded.extend(pool.into_iter().filter(|&c| supports[c] > 0).map(|c| groups.category(c).to_string()));
    }
    plan.sort_by_key(|(c, _)| *c);

    let train_member = |(code, cats): &(usize, Vec<usize>)| -> Result<EnsembleMember> {
        let rows: Vec<usize> = (0..dataset.n_rows())
            .filter(|&r| cats.contains(&groups.codes[r]))
            .collect();
        let member_seed = derive_seed(seed, stream::MEMBER + *code as u64);
        let subset = dataset.subset(&rows).without_groups();
        Ok(EnsembleMember {
            group: groups.category(*code).to_string(),
            merged: cats
                .iter()
                .filter(|&&c| c != *code)
                .map(|&c| groups.category(c).to_string())
                .collect(),
            rows: rows.len(),
            seed: member_seed,
            model: train_random_forest(&subset, params, member_seed)?,
        })
    };
    let members = plan.iter().map(train_member).collect::<Result<Vec<_>>>()?;

    Ok(BlindSeparateEnsemble {
        feature_names: dataset.feature_names().to_vec(),
        min_group_support,
        members,
        excluded,
    })
}
