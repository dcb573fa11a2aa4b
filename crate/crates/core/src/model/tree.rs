//! CART classification tree with Gini impurity.
//!
//! Leaves score the positive-label fraction of their training rows. Rows with
//! `x[feature] < threshold` go left. Candidate thresholds are midpoints between
//! consecutive distinct values; ties in impurity go to the lowest feature
//! index, then the lowest threshold.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::dataset::TabularDataset;
use crate::model::oracle::{feature_row_scorer, PredictionOracle};
use crate::rng::rng_from_seed;

const IMPURITY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Fraction of features considered at each split, in `(0, 1]`.
    pub feature_fraction: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 10,
            min_leaf: 5,
            feature_fraction: 1.0,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::InvalidParameter("max_depth must be >= 1".into()));
        }
        if self.min_leaf < 1 {
            return Err(Error::InvalidParameter("min_leaf must be >= 1".into()));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return Err(Error::InvalidParameter("feature_fraction must be in (0, 1]".into()));
        }
        Ok(())
    }

    fn features_per_split(&self, n_features: usize) -> usize {
        ((self.feature_fraction * n_features as f64).ceil() as usize).clamp(1, n_features)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        score: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    feature_names: Vec<String>,
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

impl PredictionOracle for DecisionTree {
    fn score(&self, features: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { score, .. } => return score,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if features[feature] < threshold { left } else { right },
            }
        }
    }

    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn kind(&self) -> &'static str {
        "decision_tree"
    }
}

feature_row_scorer!(DecisionTree);

/// Trains on every row of `dataset`.
pub fn train_decision_tree(dataset: &TabularDataset, params: &TreeParams, seed: u64) -> Result<DecisionTree> {
    let rows: Vec<usize> = (0..dataset.n_rows()).collect();
    train_on_rows(dataset, &rows, params, seed)
}

/// Trains on the multiset of rows `rows` (duplicates allowed, as in a bootstrap).
pub fn train_on_rows(dataset: &TabularDataset, rows: &[usize], params: &TreeParams, seed: u64) -> Result<DecisionTree> {
    params.validate()?;
    if rows.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut builder = Builder {
        data: dataset,
        params,
        rng: rng_from_seed(seed),
        nodes: Vec::new(),
        scratch: Vec::with_capacity(rows.len()),
    };
    let mut rows = rows.to_vec();
    builder.grow(&mut rows, 0);
    Ok(DecisionTree {
        feature_names: dataset.feature_names().to_vec(),
        nodes: builder.nodes,
    })
}

struct Builder<'a> {
    data: &'a TabularDataset,
    params: &'a TreeParams,
    rng: crate::rng::Rng,
    nodes: Vec<Node>,
    scratch: Vec<(f64, bool)>,
}

#[derive(Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini_sum(pos: usize, n: usize) -> f64 {
    // n * gini(node) = 2 * pos * neg / n
    if n == 0 {
        return 0.0;
    }
    2.0 * pos as f64 * (n - pos) as f64 / n as f64
}

impl Builder<'_> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let n = rows.len();
        let pos = rows.iter().filter(|&&r| self.data.label(r)).count();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            score: pos as f64 / n as f64,
            samples: n,
        });
        if depth >= self.params.max_depth || pos == 0 || pos == n || n < 2 * self.params.min_leaf {
            return id;
        }
        let Some(best) = self.best_split(rows, pos) else {
            return id;
        };
        let (feature, threshold) = (best.feature, best.threshold);
        let split_at = partition(rows, |&r| self.data.row(r)[feature] < threshold);
        let (left_rows, right_rows) = rows.split_at_mut(split_at);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, rows: &[usize], pos: usize) -> Option<Candidate> {
        let n_features = self.data.n_features();
        let k = self.params.features_per_split(n_features);
        let mut features: Vec<usize> = if k == n_features {
            (0..n_features).collect()
        } else {
            sample(&mut self.rng, n_features, k).into_vec()
        };
        features.sort_unstable();

        let n = rows.len();
        let min_leaf = self.params.min_leaf;
        let mut best: Option<Candidate> = None;
        for &f in &features {
            self.scratch.clear();
            self.scratch
                .extend(rows.iter().map(|&r| (self.data.row(r)[f], self.data.label(r))));
            self.scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0usize;
            for i in 0..n - 1 {
                if self.scratch[i].1 {
                    left_pos += 1;
                }
                let left_n = i + 1;
                let (lo, hi) = (self.scratch[i].0, self.scratch[i + 1].0);
                if lo == hi || left_n < min_leaf || n - left_n < min_leaf {
                    continue;
                }
                let impurity = (gini_sum(left_pos, left_n) + gini_sum(pos - left_pos, n - left_n)) / n as f64;
                let better = match best {
                    None => true,
                    Some(b) => impurity < b.impurity - IMPURITY_EPS,
                };
                if better {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold <= lo {
                        threshold = hi;
                    }
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }
}

/// In-place stable-ish partition; returns the number of elements satisfying `pred`.
fn partition<T: Copy>(items: &mut [T], pred: impl Fn(&T) -> bool) -> usize {
    let mut next = 0;
    for i in 0..items.len() {
        if pred(&items[i]) {
            items.swap(next, i);
            next += 1;
        }
    }
    next
}
