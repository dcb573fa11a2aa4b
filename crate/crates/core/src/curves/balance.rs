use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::model::TabularDataset;
use crate::rng::{derive_seed, rng_from_seed, stream};

/// Row indices of a label-balanced subset, in ascending order.
///
/// The majority class is undersampled uniformly at random to the minority count.
pub fn balanced_indices(labels: &[bool], seed: u64) -> Result<Vec<usize>> {
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidDataset(
            "balancing needs at least one positive and one negative row".into(),
        ));
    }
    let mut rng = rng_from_seed(derive_seed(seed, stream::BALANCE));
    let m = pos.len().min(neg.len());
    let majority = if pos.len() > neg.len() { &mut pos } else { &mut neg };
    if majority.len() > m {
        majority.shuffle(&mut rng);
        majority.truncate(m);
    }
    let mut out: Vec<usize> = pos.into_iter().chain(neg).collect();
    out.sort_unstable();
    Ok(out)
}

pub fn balance_eval_set(dataset: &TabularDataset, seed: u64) -> Result<TabularDataset> {
    Ok(dataset.subset(&balanced_indices(dataset.labels(), seed)?))
}
