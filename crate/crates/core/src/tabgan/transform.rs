//! Per-column feature transforms applied before GAN training.
//!
//! The copula transform maps each value through the column's empirical CDF
//! (plotting position `(rank - 0.5) / n`, ties sharing their average rank)
//! and then through the standard normal quantile function. Inversion goes
//! back through the normal CDF and a linearly interpolated empirical
//! quantile function clamped to the observed range.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::GanError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Per-column standardization to zero mean and unit variance.
    Vanilla,
    /// Per-column normal scores through the empirical CDF.
    #[default]
    Copula,
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// Standard normal quantile, polished with one Newton step on the CDF so that
/// `cdf(probit(p))` reproduces `p` to near machine precision.
pub fn probit(p: f64) -> f64 {
    let normal = std_normal();
    let x = normal.inverse_cdf(p);
    let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if density > 0.0 && x.is_finite() {
        x - (normal.cdf(x) - p) / density
    } else {
        x
    }
}

/// Sorted training values per column; plotting positions are implied by the length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaTransform {
    pub quantiles: Vec<Vec<f64>>,
    pub constant_columns: Vec<usize>,
}

impl CopulaTransform {
    pub fn fit(x: &Array2<f64>) -> Result<Self, GanError> {
        if x.nrows() < 2 {
            return Err(GanError::TooFewRows(x.nrows()));
        }
        let mut quantiles = Vec::with_capacity(x.ncols());
        let mut constant_columns = Vec::new();
        for (j, col) in x.axis_iter(Axis(1)).enumerate() {
            let mut sorted = col.to_vec();
            sorted.sort_by(f64::total_cmp);
            if sorted.first() == sorted.last() {
                constant_columns.push(j);
            }
            quantiles.push(sorted);
        }
        Ok(CopulaTransform { quantiles, constant_columns })
    }

    /// Empirical CDF position of `v` in column `j`, interpolated between
    /// neighbouring table entries and clamped to the first/last position.
    pub fn position(&self, j: usize, v: f64) -> f64 {
        let q = &self.quantiles[j];
        let n = q.len() as f64;
        let lo = q.partition_point(|&a| a < v);
        let hi = q.partition_point(|&a| a <= v);
        if hi > lo {
            // Exact hit: average of the tied plotting positions.
            return ((lo + hi - 1) as f64 / 2.0 + 0.5) / n;
        }
        if lo == 0 {
            return 0.5 / n;
        }
        if lo == q.len() {
            return (n - 0.5) / n;
        }
        let (a, b) = (q[lo - 1], q[lo]);
        let pa = (lo as f64 - 0.5) / n;
        pa + (v - a) / (b - a) / n
    }

    /// Empirical quantile function at probability `u`, clamped to [min, max].
    pub fn quantile(&self, j: usize, u: f64) -> f64 {
        let q = &self.quantiles[j];
        let n = q.len() as f64;
        let t = u * n - 0.5;
        if !(t > 0.0) {
            return q[0];
        }
        if t >= n - 1.0 {
            return q[q.len() - 1];
        }
        let i = t.floor() as usize;
        let frac = t - i as f64;
        q[i] + frac * (q[i + 1] - q[i])
    }

    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(x.raw_dim());
        for ((r, j), v) in x.indexed_iter() {
            if self.constant_columns.binary_search(&j).is_ok() {
                continue;
            }
            out[[r, j]] = probit(self.position(j, *v));
        }
        out
    }

    pub fn invert(&self, scores: &Array2<f64>) -> Array2<f64> {
        let normal = std_normal();
        let mut out = Array2::zeros(scores.raw_dim());
        for ((r, j), s) in scores.indexed_iter() {
            out[[r, j]] = self.quantile(j, normal.cdf(*s));
        }
        out
    }
}

/// Column means and population standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Array2<f64>) -> Result<Self, GanError> {
        if x.nrows() < 2 {
            return Err(GanError::TooFewRows(x.nrows()));
        }
        let mean = x.mean_axis(Axis(0)).expect("rows present").to_vec();
        let std = x.std_axis(Axis(0), 0.0).to_vec();
        Ok(Standardizer { mean, std })
    }

    pub fn constant_columns(&self) -> Vec<usize> {
        self.std.iter().enumerate().filter_map(|(j, &s)| (s == 0.0).then_some(j)).collect()
    }

    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        for ((_, j), v) in out.indexed_iter_mut() {
            *v = if self.std[j] > 0.0 { (*v - self.mean[j]) / self.std[j] } else { 0.0 };
        }
        out
    }

    pub fn invert(&self, z: &Array2<f64>) -> Array2<f64> {
        let mut out = z.clone();
        for ((_, j), v) in out.indexed_iter_mut() {
            *v = *v * self.std[j] + self.mean[j];
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureTransform {
    Copula(CopulaTransform),
    Standard(Standardizer),
}

impl FeatureTransform {
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        match self {
            FeatureTransform::Copula(c) => c.apply(x),
            FeatureTransform::Standard(s) => s.apply(x),
        }
    }

    pub fn width(&self) -> usize {
        match self {
            FeatureTransform::Copula(c) => c.quantiles.len(),
            FeatureTransform::Standard(s) => s.mean.len(),
        }
    }

    /// Columns with zero spread; they transform to all zeros.
    pub fn constant_columns(&self) -> Vec<usize> {
        match self {
            FeatureTransform::Copula(c) => c.constant_columns.clone(),
            FeatureTransform::Standard(s) => s.constant_columns(),
        }
    }
}

/// Fits the transform for `variant` on `x` and returns it with the transformed matrix.
pub fn fit_transform(x: &Array2<f64>, variant: Variant) -> Result<(FeatureTransform, Array2<f64>), GanError> {
    let transform = match variant {
        Variant::Copula => FeatureTransform::Copula(CopulaTransform::fit(x)?),
        Variant::Vanilla => FeatureTransform::Standard(Standardizer::fit(x)?),
    };
    let z = transform.apply(x);
    Ok((transform, z))
}

/// Maps a matrix in transformed space back to the original feature space.
pub fn invert_transform(transform: &FeatureTransform, z: &Array2<f64>) -> Result<Array2<f64>, GanError> {
    if z.ncols() != transform.width() {
        return Err(GanError::ShapeMismatch(format!(
            "transform has {} columns, matrix has {}",
            transform.width(),
            z.ncols()
        )));
    }
    Ok(match transform {
        FeatureTransform::Copula(c) => c.invert(z),
        FeatureTransform::Standard(s) => s.invert(z),
    })
}
