//! Binary classification metrics and the cross-validation harness.

mod cv;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cv::{
    apply_policy, cross_validate, cross_validate_ensemble, cross_validate_ensemble_on, cross_validate_with, Balanced, CvError, CvReport,
    evaluate_fold, EnsembleCvReport, FoldReport, SamplingError, SamplingPolicy,
};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{truth} labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("no rows to score")]
    EmptyInput,
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(u8),
}

/// Counts with class 1 as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn from_labels(y_true: &[u8], y_pred: &[u8]) -> Result<Self, MetricsError> {
        if y_true.len() != y_pred.len() {
            return Err(MetricsError::LengthMismatch { truth: y_true.len(), predicted: y_pred.len() });
        }
        let mut m = ConfusionMatrix::default();
        for (&t, &p) in y_true.iter().zip(y_pred) {
            match (t, p) {
                (1, 1) => m.tp += 1,
                (0, 1) => m.fp += 1,
                (0, 0) => m.tn += 1,
                (1, 0) => m.fn_ += 1,
                (1, v) | (0, v) => return Err(MetricsError::InvalidLabel(v)),
                (v, _) => return Err(MetricsError::InvalidLabel(v)),
            }
        }
        Ok(m)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// The same counts with the class roles swapped (class 0 as positive).
    pub fn flipped(&self) -> Self {
        ConfusionMatrix { tp: self.tn, fp: self.fn_, tn: self.tp, fn_: self.fp }
    }
}

/// Scores in `[0, 1]`. A ratio whose denominator is zero is reported as 0 and
/// its name is listed in `undefined`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub weighted_f1: f64,
    pub rmse: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

fn ratio(num: usize, den: usize, name: &str, undefined: &mut Vec<String>) -> f64 {
    if den == 0 {
        if !undefined.iter().any(|u| u == name) {
            undefined.push(name.to_string());
        }
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

impl MetricsReport {
    pub fn from_confusion(m: &ConfusionMatrix) -> Result<Self, MetricsError> {
        let n = m.total();
        if n == 0 {
            return Err(MetricsError::EmptyInput);
        }
        let mut undefined = Vec::new();
        let precision = ratio(m.tp, m.tp + m.fp, "precision", &mut undefined);
        let recall = ratio(m.tp, m.tp + m.fn_, "recall", &mut undefined);
        let f1 = harmonic(precision, recall);
        let mut ignored = Vec::new();
        let precision0 = ratio(m.tn, m.tn + m.fn_, "precision", &mut ignored);
        let recall0 = ratio(m.tn, m.tn + m.fp, "recall", &mut ignored);
        let f1_0 = harmonic(precision0, recall0);
        let (support1, support0) = ((m.tp + m.fn_) as f64, (m.tn + m.fp) as f64);
        let weighted_f1 = (support1 * f1 + support0 * f1_0) / n as f64;
        let errors = (m.fp + m.fn_) as f64;
        Ok(MetricsReport {
            accuracy: (m.tp + m.tn) as f64 / n as f64,
            precision,
            recall,
            f1,
            weighted_f1,
            rmse: (errors / n as f64).sqrt(),
            undefined,
        })
    }

    /// Plain mean of every ratio. RMSE is the root of the mean squared error,
    /// so `rmse² + accuracy = 1` still holds. `undefined` is the union of the
    /// inputs' flags.
    pub fn mean(reports: &[MetricsReport]) -> Result<Self, MetricsError> {
        if reports.is_empty() {
            return Err(MetricsError::EmptyInput);
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let mut undefined: Vec<String> = reports.iter().flat_map(|r| r.undefined.iter().cloned()).collect();
        undefined.sort();
        undefined.dedup();
        Ok(MetricsReport {
            accuracy: avg(|r| r.accuracy),
            precision: avg(|r| r.precision),
            recall: avg(|r| r.recall),
            f1: avg(|r| r.f1),
            weighted_f1: avg(|r| r.weighted_f1),
            rmse: avg(|r| r.rmse * r.rmse).sqrt(),
            undefined,
        })
    }
}

pub fn binary_metrics(y_true: &[u8], y_pred: &[u8]) -> Result<MetricsReport, MetricsError> {
    MetricsReport::from_confusion(&ConfusionMatrix::from_labels(y_true, y_pred)?)
}
