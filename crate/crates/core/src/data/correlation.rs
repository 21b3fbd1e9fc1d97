use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{DataError, Table};

/// Pairwise Pearson correlations between feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub values: Array2<f64>,
    /// Columns with zero variance. Their correlation with every other column
    /// is reported as 0 and with themselves as 1.
    pub constant_columns: Vec<usize>,
}

/// Pearson correlation of every pair of feature columns. Needs at least two rows.
pub fn pearson_correlation(t: &Table) -> Result<CorrelationMatrix, DataError> {
    let n = t.row_count();
    if n < 2 {
        return Err(DataError::InvalidArgument(format!(
            "correlation needs at least 2 rows, got {n}"
        )));
    }
    let d = t.col_count();
    let x = t.features();
    let means: Array1<f64> = x.mean_axis(ndarray::Axis(0)).expect("n >= 2");
    let centered = x - &means;
    let constant = t.constant_columns();
    let norms: Vec<f64> = (0..d)
        .map(|j| centered.column(j).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();

    let mut values = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        values[[i, i]] = 1.0;
        if constant.contains(&i) {
            continue;
        }
        let ci = centered.column(i);
        for j in (i + 1)..d {
            if constant.binary_search(&j).is_ok() {
                continue;
            }
            let dot = ci.dot(&centered.column(j));
            let r = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            values[[i, j]] = r;
            values[[j, i]] = r;
        }
    }
    Ok(CorrelationMatrix { values, constant_columns: constant })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneOptions {
    /// Pairs whose correlation exceeds this are collapsed; must lie in (0, 1].
    pub threshold: f64,
    /// Compare |r| (default) rather than signed r.
    pub absolute: bool,
}

impl Default for PruneOptions {
    fn default() -> Self {
        PruneOptions { threshold: 0.95, absolute: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedColumn {
    pub kept: String,
    pub dropped: String,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub threshold: f64,
    pub dropped: Vec<DroppedColumn>,
    pub remaining_names: Vec<String>,
}

/// Drops the later column of every highly correlated pair, using |r|.
pub fn prune_correlated(t: &Table, threshold: f64) -> Result<(Table, PruneReport), DataError> {
    prune_correlated_with(t, PruneOptions { threshold, absolute: true })
}

/// Scans columns left to right; a column is dropped when it correlates above
/// the threshold with an earlier column that is still kept.
pub fn prune_correlated_with(
    t: &Table,
    opts: PruneOptions,
) -> Result<(Table, PruneReport), DataError> {
    if !(opts.threshold > 0.0 && opts.threshold <= 1.0) {
        return Err(DataError::InvalidArgument(format!(
            "correlation threshold must lie in (0, 1], got {}",
            opts.threshold
        )));
    }
    let names = t.feature_names();
    if t.row_count() < 2 {
        let report = PruneReport {
            threshold: opts.threshold,
            dropped: Vec::new(),
            remaining_names: names.to_vec(),
        };
        return Ok((t.clone(), report));
    }
    let corr = pearson_correlation(t)?;
    let exceeds = |r: f64| if opts.absolute { r.abs() > opts.threshold } else { r > opts.threshold };

    let mut kept: Vec<usize> = Vec::with_capacity(t.col_count());
    let mut dropped = Vec::new();
    for j in 0..t.col_count() {
        match kept.iter().find(|&&i| exceeds(corr.values[[i, j]])) {
            Some(&i) => dropped.push(DroppedColumn {
                kept: names[i].clone(),
                dropped: names[j].clone(),
                correlation: corr.values[[i, j]],
            }),
            None => kept.push(j),
        }
    }
    let pruned = t.select_columns(&kept);
    let report = PruneReport {
        threshold: opts.threshold,
        dropped,
        remaining_names: pruned.feature_names().to_vec(),
    };
    Ok((pruned, report))
}
