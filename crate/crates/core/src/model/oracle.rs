use crate::model::dataset::TabularDataset;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Query interface over a trained binary classifier.
///
/// Implementations are immutable after training and must return the same
/// score for the same input, always within `[0, 1]`.
pub trait PredictionOracle: Send + Sync {
    fn score(&self, features: &[f64]) -> f64;

    fn classify(&self, features: &[f64], threshold: f64) -> bool {
        self.score(features) >= threshold
    }

    fn feature_names(&self) -> &[String];

    fn kind(&self) -> &'static str;
}

/// Scores a dataset row. Differs from [`PredictionOracle::score`] only for
/// models that need more than the feature vector (e.g. a model with the group
/// attribute re-instated as an input).
pub trait RowScorer: Send + Sync {
    fn score_row(&self, dataset: &TabularDataset, row: usize) -> f64;

    fn score_all(&self, dataset: &TabularDataset) -> Vec<f64> {
        (0..dataset.n_rows()).map(|i| self.score_row(dataset, i)).collect()
    }
}

/// Implements [`RowScorer`] by passing the row's feature vector to the oracle.
macro_rules! feature_row_scorer {
    ($($ty:ty),* $(,)?) => {
        $(impl $crate::model::oracle::RowScorer for $ty {
            fn score_row(&self, dataset: &$crate::model::TabularDataset, row: usize) -> f64 {
                $crate::model::oracle::PredictionOracle::score(self, dataset.row(row))
            }
        })*
    };
}
pub(crate) use feature_row_scorer;

/// An oracle returning the same score everywhere.
#[derive(Debug, Clone)]
pub struct ConstantOracle {
    pub value: f64,
    pub feature_names: Vec<String>,
}

impl PredictionOracle for ConstantOracle {
    fn score(&self, _features: &[f64]) -> f64 {
        self.value
    }

    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn kind(&self) -> &'static str {
        "constant"
    }
}

feature_row_scorer!(ConstantOracle);

/// Wraps a closure as an oracle. Mostly useful for constructed test models.
pub struct FnOracle<F> {
    f: F,
    feature_names: Vec<String>,
}

impl<F> FnOracle<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(feature_names: Vec<String>, f: F) -> Self {
        Self { f, feature_names }
    }
}

impl<F> PredictionOracle for FnOracle<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn score(&self, features: &[f64]) -> f64 {
        (self.f)(features).clamp(0.0, 1.0)
    }

    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn kind(&self) -> &'static str {
        "function"
    }
}

impl<F> RowScorer for FnOracle<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn score_row(&self, dataset: &TabularDataset, row: usize) -> f64 {
        self.score(dataset.row(row))
    }
}

impl RowScorer for Box<dyn RowScorer> {
    fn score_row(&self, dataset: &TabularDataset, row: usize) -> f64 {
        (**self).score_row(dataset, row)
    }
}
