use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DataError, Table};
use crate::rng;

/// Assignment of every row to one of `k` validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of_row: Vec<usize>,
}

impl FoldAssignment {
    pub fn validation_indices(&self, fold: usize) -> Vec<usize> {
        self.fold_of_row
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| (f == fold).then_some(i))
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.fold_of_row
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| (f != fold).then_some(i))
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of_row {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified k-fold assignment.
///
/// Each class is shuffled on its own seeded stream and dealt round-robin into
/// the folds; the deal continues across classes so total fold sizes also
/// differ by at most one.
pub fn stratified_kfold(t: &Table, k: usize, seed: u64) -> Result<FoldAssignment, DataError> {
    if k < 2 {
        return Err(DataError::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let mut fold_of_row = vec![0; t.row_count()];
    let mut next = 0usize;
    for label in [0u8, 1] {
        let mut rows = t.indices_of(label);
        if rows.len() < k {
            return Err(DataError::TooFewRowsPerClass { label, count: rows.len(), k });
        }
        rows.shuffle(&mut rng::stream(seed, u64::from(label)));
        for row in rows {
            fold_of_row[row] = next % k;
            next += 1;
        }
    }
    Ok(FoldAssignment { k, fold_of_row })
}

/// Stratified holdout split into `(train, test)`; each class contributes
/// `round(count * test_fraction)` rows to the test side. Both sides keep the
/// original row order.
pub fn stratified_split(
    t: &Table,
    test_fraction: f64,
    seed: u64,
) -> Result<(Table, Table), DataError> {
    let (train, test) = stratified_split_indices(t, test_fraction, seed)?;
    Ok((t.select_rows(&train), t.select_rows(&test)))
}

/// A two-fold assignment for a single stratified holdout: fold 0 holds the
/// test rows, fold 1 the training rows.
pub fn holdout_assignment(t: &Table, test_fraction: f64, seed: u64) -> Result<FoldAssignment, DataError> {
    let (_, test) = stratified_split_indices(t, test_fraction, seed)?;
    let mut fold_of_row = vec![1; t.row_count()];
    for i in test {
        fold_of_row[i] = 0;
    }
    Ok(FoldAssignment { k: 2, fold_of_row })
}

pub(crate) fn stratified_split_indices(
    t: &Table,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for label in [0u8, 1] {
        let mut rows = t.indices_of(label);
        let n_test = (rows.len() as f64 * test_fraction).round() as usize;
        if n_test == 0 || n_test == rows.len() {
            return Err(DataError::DegenerateSplit(format!(
                "class {label} with {} rows cannot be split at fraction {test_fraction}",
                rows.len()
            )));
        }
        rows.shuffle(&mut rng::stream(seed, 100 + u64::from(label)));
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
