use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::dataset::TabularDataset;
use crate::model::oracle::{feature_row_scorer, PredictionOracle};
use crate::model::tree::{train_on_rows, DecisionTree, TreeParams};
use crate::rng::{derive_seed, rng_from_seed, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub feature_fraction: f64,
    #[serde(default = "yes")]
    pub bootstrap: bool,
}

fn yes() -> bool {
    true
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 50,
            max_depth: 10,
            min_leaf: 5,
            feature_fraction: 0.5,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            feature_fraction: self.feature_fraction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::InvalidParameter("n_trees must be >= 1".into()));
        }
        self.tree_params().validate()
    }
}

/// Seed used for tree `index` of a forest trained with `seed`.
pub fn tree_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, stream::TREE + index as u64)
}

/// Row multiset drawn with replacement, same size as the dataset.
pub fn bootstrap_rows(n_rows: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(derive_seed(seed, stream::BOOTSTRAP));
    (0..n_rows).map(|_| rng.random_range(0..n_rows)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    params: ForestParams,
    seed: u64,
    tree_seeds: Vec<u64>,
    trees: Vec<DecisionTree>,
}

impl RandomForestModel {
    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tree_seeds(&self) -> &[u64] {
        &self.tree_seeds
    }
}

impl PredictionOracle for RandomForestModel {
    fn score(&self, features: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.score(features)).sum();
        sum / self.trees.len() as f64
    }

    fn feature_names(&self) -> &[String] {
        self.trees[0].feature_names()
    }

    fn kind(&self) -> &'static str {
        "random_forest"
    }
}

feature_row_scorer!(RandomForestModel);

/// Each tree is grown on a bootstrap sample (if enabled) with its own seed
/// from [`tree_seed`], so trees can be trained in any order.
pub fn train_random_forest(dataset: &TabularDataset, params: &ForestParams, seed: u64) -> Result<RandomForestModel> {
    params.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let tree_params = params.tree_params();
    let tree_seeds: Vec<u64> = (0..params.n_trees).map(|i| tree_seed(seed, i)).collect();
    let n = dataset.n_rows();
    let all_rows: Vec<usize> = (0..n).collect();
    let grow = |&s: &u64| {
        if params.bootstrap {
            train_on_rows(dataset, &bootstrap_rows(n, s), &tree_params, s)
        } else {
            train_on_rows(dataset, &all_rows, &tree_params, s)
        }
    };

    #[cfg(feature = "parallel")]
    let trees: Result<Vec<DecisionTree>> = {
        use rayon::prelude::*;
        tree_seeds.par_iter().map(grow).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let trees: Result<Vec<DecisionTree>> = tree_seeds.iter().map(grow).collect();

    Ok(RandomForestModel {
        params: *params,
        seed,
        tree_seeds,
        trees: trees?,
    })
}
