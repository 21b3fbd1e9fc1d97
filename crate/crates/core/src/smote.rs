//! Synthetic Minority Oversampling (SMOTE).
//!
//! New minority rows are convex combinations `x + u * (x' - x)` of a minority
//! row `x` and one of its `k` nearest minority neighbours `x'`.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{class_counts, minority_label, DataError, Table};
use crate::rng;

#[derive(Debug, Error)]
pub enum SmoteError {
    #[error("class {label} has {size} rows; need more than k = {k}")]
    ClassTooSmall { label: u8, size: usize, k: usize },
    #[error("invalid smote config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetCount {
    /// Grow the minority class to the majority class size.
    MatchMajority,
    /// Grow the minority class to this many rows.
    Count(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub target: TargetCount,
    pub seed: u64,
    /// Measure neighbour distance on z-scored columns instead of raw values.
    pub standardize: bool,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig { k_neighbors: 5, target: TargetCount::MatchMajority, seed: 0, standardize: false }
    }
}

/// For every row of class `label` (in table order), the table indices of its
/// `k` nearest same-class rows by Euclidean distance. Ties go to the lower row index.
pub fn knn_within_class(t: &Table, label: u8, k: usize) -> Result<Vec<Vec<usize>>, SmoteError> {
    knn_on(t.features(), &t.indices_of(label), label, k)
}

fn knn_on(
    x: &Array2<f64>,
    members: &[usize],
    label: u8,
    k: usize,
) -> Result<Vec<Vec<usize>>, SmoteError> {
    if k == 0 {
        return Err(SmoteError::InvalidConfig("k_neighbors must be at least 1".into()));
    }
    if members.len() <= k {
        return Err(SmoteError::ClassTooSmall { label, size: members.len(), k });
    }
    let neighbours = members
        .par_iter()
        .map(|&a| {
            let ra = x.row(a);
            let mut dist: Vec<(f64, usize)> = members
                .iter()
                .filter(|&&b| b != a)
                .map(|&b| {
                    let d2 = ra.iter().zip(x.row(b)).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
                    (d2, b)
                })
                .collect();
            dist.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
            dist.truncate(k);
            dist.into_iter().map(|(_, b)| b).collect()
        })
        .collect();
    Ok(neighbours)
}

/// The point `u` of the way from `x` to `neighbour`.
pub fn interpolate(x: &[f64], neighbour: &[f64], u: f64) -> Vec<f64> {
    x.iter().zip(neighbour).map(|(a, b)| a + u * (b - a)).collect()
}

/// Generates `n` synthetic rows of class `label`; returns them as a table of
/// their own (same columns, all labelled `label`).
pub fn smote_synthesize(t: &Table, label: u8, n: usize, cfg: &SmoteConfig) -> Result<Table, SmoteError> {
    let members = t.indices_of(label);
    if cfg.k_neighbors == 0 {
        return Err(SmoteError::InvalidConfig("k_neighbors must be at least 1".into()));
    }
    if members.len() <= cfg.k_neighbors {
        return Err(SmoteError::ClassTooSmall { label, size: members.len(), k: cfg.k_neighbors });
    }
    let metric_space;
    let space = if cfg.standardize {
        metric_space = standardized(t.features());
        &metric_space
    } else {
        t.features()
    };
    let neighbours = knn_on(space, &members, label, cfg.k_neighbors)?;

    let x = t.features();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(cfg.seed, i as u64);
            let base = rng.random_range(0..members.len());
            let nb = neighbours[base][rng.random_range(0..cfg.k_neighbors)];
            let u: f64 = rng.random();
            let a = x.row(members[base]).to_vec();
            let b = x.row(nb).to_vec();
            interpolate(&a, &b, u)
        })
        .collect();
    Ok(Table::from_named_rows(t.feature_names().to_vec(), &rows, vec![label; n])?)
}

/// Oversamples the minority class up to the configured target. Original rows
/// come first, unchanged; synthetic rows are appended. A table already at or
/// above the target is returned as is.
pub fn smote_balance(t: &Table, cfg: &SmoteConfig) -> Result<Table, SmoteError> {
    let counts = class_counts(t);
    let minority = minority_label(t);
    let have = counts[&minority];
    let want = match cfg.target {
        TargetCount::MatchMajority => counts[&(1 - minority)],
        TargetCount::Count(n) => n,
    };
    if want <= have {
        return Ok(t.clone());
    }
    let synthetic = smote_synthesize(t, minority, want - have, cfg)?;
    Ok(t.concat(&synthetic)?)
}

fn standardized(x: &Array2<f64>) -> Array2<f64> {
    let mean = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(x.ncols()));
    let std = x.std_axis(Axis(0), 0.0).mapv(|s| if s > 0.0 { s } else { 1.0 });
    (x - &mean) / &std
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(values: &[f64], labels: Vec<u8>) -> Table {
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        Table::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn one_dimensional_neighbours() {
        // Majority rows interleaved to check that only same-class rows are used.
        let t = points(&[0.0, 0.5, 1.0, 10.0], vec![1, 0, 1, 1]);
        let nn = knn_within_class(&t, 1, 1).unwrap();
        assert_eq!(nn, vec![vec![2], vec![0], vec![2]]);
        let nn2 = knn_within_class(&t, 1, 2).unwrap();
        assert_eq!(nn2[0], vec![2, 3]);
    }

    #[test]
    fn identical_points_neighbour_each_other() {
        let t = points(&[3.0, 3.0], vec![1, 1]);
        assert_eq!(knn_within_class(&t, 1, 1).unwrap(), vec![vec![1], vec![0]]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let t = points(&[0.0, -1.0, 1.0], vec![1, 1, 1]);
        assert_eq!(knn_within_class(&t, 1, 1).unwrap()[0], vec![1]);
    }

    #[test]
    fn class_too_small() {
        let t = points(&[0.0, 1.0, 2.0], vec![1, 1, 0]);
        assert!(matches!(knn_within_class(&t, 1, 2), Err(SmoteError::ClassTooSmall { size: 2, k: 2, .. })));
        assert!(knn_within_class(&t, 1, 0).is_err());
    }

    #[test]
    fn midpoint() {
        assert_eq!(interpolate(&[0.0, 0.0], &[1.0, 1.0], 0.5), vec![0.5, 0.5]);
    }

    #[test]
    fn balances_paper_counts() {
        let n = 4465;
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i >= 3000)).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![(i % 97) as f64, (i % 13) as f64]).collect();
        let t = Table::from_rows(&rows, labels).unwrap();
        let out = smote_balance(&t, &SmoteConfig { seed: 5, ..Default::default() }).unwrap();
        assert_eq!(out.row_count() - n, 1535);
        let counts = class_counts(&out);
        assert_eq!((counts[&0], counts[&1]), (3000, 3000));
        assert_eq!(out.select_rows(&(0..n).collect::<Vec<_>>()), t);
    }

    #[test]
    fn balanced_input_is_returned_unchanged() {
        let t = points(&[0.0, 1.0, 2.0, 3.0], vec![0, 1, 0, 1]);
        assert_eq!(smote_balance(&t, &SmoteConfig { k_neighbors: 1, ..Default::default() }).unwrap(), t);
    }

    #[test]
    fn explicit_target_and_determinism() {
        let t = points(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], vec![0, 0, 0, 0, 0, 1, 1, 1]);
        let cfg = SmoteConfig { k_neighbors: 2, target: TargetCount::Count(10), seed: 42, standardize: false };
        let a = smote_balance(&t, &cfg).unwrap();
        assert_eq!(class_counts(&a)[&1], 10);
        assert_eq!(a, smote_balance(&t, &cfg).unwrap());
        for i in 8..a.row_count() {
            let v = a.features()[[i, 0]];
            assert!((5.0..=7.0).contains(&v));
        }
        let other = smote_balance(&t, &SmoteConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn standardized_distance_changes_neighbours() {
        // The majority row inflates the scale of column 1 only.
        let rows = vec![vec![0.0, 0.0], vec![0.0, 4.0], vec![2.0, 0.0], vec![0.0, 100.0]];
        let t = Table::from_rows(&rows, vec![1, 1, 1, 0]).unwrap();
        assert_eq!(knn_on(t.features(), &[0, 1, 2], 1, 1).unwrap()[0], vec![2]);
        let z = standardized(t.features());
        assert_eq!(knn_on(&z, &[0, 1, 2], 1, 1).unwrap()[0], vec![1]);
    }
}
