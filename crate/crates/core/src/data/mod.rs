//! Tabular dataset carrier and the preprocessing operations that act on it.

mod correlation;
mod csv_io;
mod folds;

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use correlation::{
    pearson_correlation, prune_correlated, prune_correlated_with, CorrelationMatrix,
    DroppedColumn, PruneOptions, PruneReport,
};
pub use csv_io::{load_csv, read_csv, write_csv, write_csv_to, DEFAULT_LABEL_COLUMN};
pub use folds::{holdout_assignment, stratified_kfold, stratified_split, FoldAssignment};
pub(crate) use folds::stratified_split_indices;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("input file not found: {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("label column {0:?} not found in header")]
    MissingLabelColumn(String),
    /// Row is the 1-based data row (header excluded); column is the 1-based file column.
    #[error("non-numeric cell at row {row}, column {col}: {value:?}")]
    NonNumericCell { row: usize, col: usize, value: String },
    #[error("missing value at row {row}, column {col}")]
    MissingValue { row: usize, col: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteCell { row: usize, col: usize },
    #[error("label at row {row} is {value:?}; expected 0 or 1")]
    InvalidLabel { row: usize, value: String },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("duplicate feature name {0:?}")]
    DuplicateName(String),
    #[error("class {label} has {count} rows, fewer than k = {k}")]
    TooFewRowsPerClass { label: u8, count: usize, k: usize },
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Dense numeric feature matrix with a binary label per row.
///
/// Label 0 is the "safe" class, 1 the "malware" class. Construction validates
/// shapes, unique names, finite cells and labels, so every `Table` in
/// circulation satisfies those invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    feature_names: Vec<String>,
    features: Array2<f64>,
    labels: Vec<u8>,
}

impl Table {
    pub fn new(
        feature_names: Vec<String>,
        features: Array2<f64>,
        labels: Vec<u8>,
    ) -> Result<Self, DataError> {
        if features.nrows() != labels.len() {
            return Err(DataError::ShapeMismatch(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.ncols() != feature_names.len() {
            return Err(DataError::ShapeMismatch(format!(
                "{} feature columns but {} names",
                features.ncols(),
                feature_names.len()
            )));
        }
        let mut seen = HashSet::with_capacity(feature_names.len());
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(DataError::DuplicateName(name.clone()));
            }
        }
        for ((row, col), v) in features.indexed_iter() {
            if !v.is_finite() {
                return Err(DataError::NonFiniteCell { row: row + 1, col: col + 1 });
            }
        }
        if let Some((row, l)) = labels.iter().enumerate().find(|(_, &l)| l > 1) {
            return Err(DataError::InvalidLabel { row: row + 1, value: l.to_string() });
        }
        Ok(Table { feature_names, features, labels })
    }

    /// A table with the given columns and no rows.
    pub fn empty(feature_names: Vec<String>) -> Result<Self, DataError> {
        let cols = feature_names.len();
        Table::new(feature_names, Array2::zeros((0, cols)), Vec::new())
    }

    /// Builds a table from row-major data, naming columns `f0, f1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self, DataError> {
        let cols = rows.first().map_or(0, Vec::len);
        let names = (0..cols).map(|j| format!("f{j}")).collect();
        Table::from_named_rows(names, rows, labels)
    }

    pub fn from_named_rows(
        feature_names: Vec<String>,
        rows: &[Vec<f64>],
        labels: Vec<u8>,
    ) -> Result<Self, DataError> {
        let cols = feature_names.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(DataError::ShapeMismatch(format!(
                "row {} has {} values, expected {cols}",
                bad + 1,
                rows[bad].len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let features = Array2::from_shape_vec((rows.len(), cols), flat)
            .map_err(|e| DataError::ShapeMismatch(e.to_string()))?;
        Table::new(feature_names, features, labels)
    }

    pub fn row_count(&self) -> usize {
        self.labels.len()
    }

    pub fn col_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    /// Row indices carrying `label`, in table order.
    pub fn indices_of(&self, label: u8) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == label).then_some(i))
            .collect()
    }

    /// Rows at `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Table {
        Table {
            feature_names: self.feature_names.clone(),
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Columns at `indices`, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Table {
        Table {
            feature_names: indices.iter().map(|&j| self.feature_names[j].clone()).collect(),
            features: self.features.select(Axis(1), indices),
            labels: self.labels.clone(),
        }
    }

    /// Rows of one class.
    pub fn class_rows(&self, label: u8) -> Table {
        self.select_rows(&self.indices_of(label))
    }

    /// Appends the rows of `other`, which must have identical column names.
    pub fn concat(&self, other: &Table) -> Result<Table, DataError> {
        if self.feature_names != other.feature_names {
            return Err(DataError::ShapeMismatch(
                "cannot concatenate tables with different columns".into(),
            ));
        }
        let features = ndarray::concatenate(Axis(0), &[self.features.view(), other.features.view()])
            .map_err(|e| DataError::ShapeMismatch(e.to_string()))?;
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(Table { feature_names: self.feature_names.clone(), features, labels })
    }

    /// Indices of columns whose values are all identical (including empty tables' columns).
    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.col_count())
            .filter(|&j| {
                let col = self.features.column(j);
                match col.first() {
                    Some(&first) => col.iter().all(|&v| v == first),
                    None => true,
                }
            })
            .collect()
    }
}

/// Number of rows per label; both labels are always present as keys.
pub fn class_counts(t: &Table) -> BTreeMap<u8, usize> {
    let mut counts = BTreeMap::from([(0u8, 0usize), (1u8, 0usize)]);
    for &l in t.labels() {
        *counts.entry(l).or_default() += 1;
    }
    counts
}

/// Label with fewer rows (ties resolve to 1).
pub fn minority_label(t: &Table) -> u8 {
    let counts = class_counts(t);
    if counts[&0] < counts[&1] {
        0
    } else {
        1
    }
}
