use rand::seq::SliceRandom;

use crate::dataset::ClassLabel;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Stratified `k`-fold assignment.
///
/// Each class is shuffled with the seeded generator, then the wild and
/// mutated indices are dealt round-robin over the folds in that order, the
/// dealing position carrying over from one class to the next. Fold sizes
/// differ by at most one and each fold's class counts are within one of
/// the global proportion. Folds are returned with sorted indices.
pub fn kfold_split(labels: &[ClassLabel], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(Error::InvalidArgument(format!("{n} samples cannot fill {k} folds")));
    }
    let mut rng = rng_from_seed(seed);
    let mut folds = vec![Vec::new(); k];
    let mut position = 0;
    for class in [ClassLabel::Wild, ClassLabel::Mutated] {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        if members.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "class {class} has {} member(s); stratification needs at least 2",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for idx in members {
            folds[position % k].push(idx);
            position += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Indices not in `fold`, sorted.
pub fn training_indices(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut held = vec![false; n];
    for &i in fold {
        held[i] = true;
    }
    (0..n).filter(|&i| !held[i]).collect()
}

pub fn error_rate(predictions: &[ClassLabel], truth: &[ClassLabel]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("error rate of an empty set".into()));
    }
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: predictions.len(),
        });
    }
    let wrong = predictions.iter().zip(truth).filter(|(p, t)| p != t).count();
    Ok(wrong as f64 / predictions.len() as f64)
}

/// Percentage with a leading `%` and two decimals, e.g. `%12.50`.
pub fn format_percent(rate: f64) -> String {
    format!("%{:.2}", rate * 100.0)
}
