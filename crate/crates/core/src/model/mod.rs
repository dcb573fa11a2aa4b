//! Datasets, the prediction-oracle abstraction, and the built-in learners.

pub mod cv;
pub mod dataset;
pub mod forest;
pub mod oracle;
pub mod tree;

pub use cv::{k_fold_cross_validate, stratified_folds, FoldMetrics};
pub use dataset::{ColumnRoles, GroupColumn, TabularDataset};
pub use forest::{train_random_forest, ForestParams, RandomForestModel};
pub use oracle::{ConstantOracle, FnOracle, PredictionOracle, RowScorer, DEFAULT_THRESHOLD};
pub use tree::{train_decision_tree, DecisionTree, TreeParams};
