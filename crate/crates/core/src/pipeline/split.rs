//! Stratified train/validation/test and k-fold partitions.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::rng::rng_from_seed;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffled indices of each class, positives first.
fn class_indices(labels: &[bool], seed: u64) -> [Vec<usize>; 2] {
    let mut rng = rng_from_seed(seed);
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    [pos, neg]
}

/// Stratified split by `ratios = (train, validation, test)` weights.
///
/// Each class is divided separately: its validation and test counts are
/// the rounded shares and training takes the remainder.
pub fn nested_split(labels: &[bool], ratios: (usize, usize, usize), seed: u64) -> Result<NestedSplit, PipelineError> {
    let (rt, rv, rs) = ratios;
    let total = rt + rv + rs;
    if rt == 0 || rv == 0 || rs == 0 {
        return Err(PipelineError::Config("all split ratios must be positive".into()));
    }
    let mut split = NestedSplit { train: Vec::new(), validation: Vec::new(), test: Vec::new() };
    for (class, members) in class_indices(labels, seed).into_iter().enumerate() {
        let n = members.len();
        let share = |r: usize| (n * r + total / 2) / total;
        let (n_val, n_test) = (share(rv), share(rs));
        if n_val == 0 || n_test == 0 || n_val + n_test >= n {
            return Err(PipelineError::ClassTooSmall { positive: class == 0, count: n });
        }
        split.test.extend_from_slice(&members[..n_test]);
        split.validation.extend_from_slice(&members[n_test..n_test + n_val]);
        split.train.extend_from_slice(&members[n_test + n_val..]);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Stratified `k`-fold test sets.
///
/// The shuffled positives followed by the shuffled negatives are dealt
/// round-robin, so fold sizes differ by at most one and each fold's class
/// balance matches the whole set as closely as possible.
pub fn kfold_split(labels: &[bool], k: usize, seed: u64) -> Result<Vec<Vec<usize>>, PipelineError> {
    if k < 2 {
        return Err(PipelineError::Config("k-fold needs k >= 2".into()));
    }
    let mut folds = vec![Vec::new(); k];
    let mut slot = 0;
    for (class, members) in class_indices(labels, seed).into_iter().enumerate() {
        if members.len() < k {
            return Err(PipelineError::ClassTooSmall { positive: class == 0, count: members.len() });
        }
        for i in members {
            folds[slot % k].push(i);
            slot += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// Indices not in `fold`.
pub fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut in_fold = vec![false; n];
    fold.iter().for_each(|&i| in_fold[i] = true);
    (0..n).filter(|&i| !in_fold[i]).collect()
}
