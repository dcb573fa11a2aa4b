//! Re-instating the group attribute as one-hot model inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::oracle::{PredictionOracle, RowScorer};
use crate::model::{train_random_forest, ForestParams, RandomForestModel, TabularDataset};

pub fn indicator_name(attribute: &str, category: &str) -> String {
    format!("{attribute}={category}")
}

/// Appends one indicator column per category; each row has exactly one set.
pub fn encode_group_indicators(dataset: &TabularDataset) -> Result<TabularDataset> {
    let groups = dataset.require_groups()?;
    let names = groups
        .categories
        .iter()
        .map(|c| indicator_name(&groups.name, c))
        .collect();
    let values = groups
        .codes
        .iter()
        .map(|&code| one_hot(code, groups.categories.len()))
        .collect();
    dataset.with_extra_features(names, values)
}

fn one_hot(code: usize, n: usize) -> Vec<f64> {
    (0..n).map(|c| if c == code { 1.0 } else { 0.0 }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeAwareModel {
    attribute: String,
    categories: Vec<String>,
    model: RandomForestModel,
}

impl AttributeAwareModel {
    /// Base features followed by the group's indicator block.
    pub fn encode(&self, features: &[f64], group: &str) -> Result<Vec<f64>> {
        let code = self
            .categories
            .iter()
            .position(|c| c == group)
            .ok_or_else(|| Error::UnknownGroup(group.to_string()))?;
        let mut x = features.to_vec();
        x.extend(one_hot(code, self.categories.len()));
        Ok(x)
    }

    pub fn model(&self) -> &RandomForestModel {
        &self.model
    }
}

impl PredictionOracle for AttributeAwareModel {
    /// Expects the encoded vector: base features then indicators.
    fn score(&self, features: &[f64]) -> f64 {
        self.model.score(features)
    }

    fn feature_names(&self) -> &[String] {
        self.model.feature_names()
    }

    fn kind(&self) -> &'static str {
        "random_forest_with_attribute"
    }
}

impl RowScorer for AttributeAwareModel {
    fn score_row(&self, dataset: &TabularDataset, row: usize) -> f64 {
        let groups = dataset.groups().expect("attribute-aware model needs the group attribute");
        let mut x = dataset.row(row).to_vec();
        x.extend(one_hot(groups.codes[row], self.categories.len()));
        self.model.score(&x)
    }
}

pub fn train_with_attribute(dataset: &TabularDataset, params: &ForestParams, seed: u64) -> Result<AttributeAwareModel> {
    let groups = dataset.require_groups()?;
    let encoded = encode_group_indicators(dataset)?;
    Ok(AttributeAwareModel {
        attribute: groups.name.clone(),
        categories: groups.categories.clone(),
        model: train_random_forest(&encoded.without_groups(), params, seed)?,
    })
}
