//! Tree-structured Parzen estimator proposals.
//!
//! Observed trials are split into a "good" and a "bad" group by objective.
//! Each group gets a one-dimensional Gaussian-kernel density (Scott's rule
//! bandwidth with a floor that shrinks as observations accumulate).
//! Candidates are drawn from the good density and the one maximizing the
//! good/bad density ratio is proposed.

use rand::Rng;

use super::space::{ParamKind, ParamSpec, ParamValue};
use super::{Direction, SamplerConfig, Trial, TrialState};
use crate::rng::standard_normal;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Gaussian mixture with equal weights and one shared bandwidth.
#[derive(Debug, Clone)]
pub struct ParzenEstimator {
    pub centers: Vec<f64>,
    pub bandwidth: f64,
}

impl ParzenEstimator {
    /// Scott's-rule bandwidth, floored at `range / min(n + 1, 100)` so a
    /// tight cluster of observations cannot collapse the search onto itself.
    pub fn fit(centers: &[f64], range: f64) -> Self {
        let n = centers.len() as f64;
        let floor = range / (n + 1.0).min(100.0);
        let bandwidth = if centers.len() < 2 {
            floor
        } else {
            let mean = centers.iter().sum::<f64>() / n;
            let var = centers.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n;
            (var.sqrt() * n.powf(-0.2)).max(floor)
        };
        ParzenEstimator { centers: centers.to_vec(), bandwidth }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let terms: Vec<f64> = self
            .centers
            .iter()
            .map(|c| -0.5 * ((x - c) / h).powi(2) - h.ln() - LN_SQRT_2PI)
            .collect();
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
        max + sum.ln() - (self.centers.len() as f64).ln()
    }

    /// Draw from the mixture, resampling until it lands in `[low, high]`
    /// (clamped after 32 misses).
    pub fn sample<R: Rng + ?Sized>(&self, low: f64, high: f64, rng: &mut R) -> f64 {
        let mut x = low;
        for _ in 0..32 {
            let c = self.centers[rng.random_range(0..self.centers.len())];
            x = c + self.bandwidth * standard_normal(rng);
            if (low..=high).contains(&x) {
                return x;
            }
        }
        x.clamp(low, high)
    }
}

/// Proposal on a continuous interval given good and bad observations.
/// An empty good side falls back to a uniform draw; an empty bad side uses a
/// flat density.
pub fn propose_continuous<R: Rng + ?Sized>(
    good: &[f64],
    bad: &[f64],
    low: f64,
    high: f64,
    n_candidates: usize,
    rng: &mut R,
) -> f64 {
    if good.is_empty() {
        return rng.random_range(low..=high);
    }
    let range = high - low;
    let l = ParzenEstimator::fit(good, range);
    let g = (!bad.is_empty()).then(|| ParzenEstimator::fit(bad, range));
    let mut best = (f64::NEG_INFINITY, low);
    for _ in 0..n_candidates.max(1) {
        let x = l.sample(low, high, rng);
        let bad_density = g.as_ref().map_or(-range.ln(), |g| g.log_density(x));
        let score = l.log_density(x) - bad_density;
        if score > best.0 {
            best = (score, x);
        }
    }
    best.1
}

/// Proposal over category indices with add-one smoothed frequencies.
pub fn propose_categorical<R: Rng + ?Sized>(
    good: &[usize],
    bad: &[usize],
    n_choices: usize,
    n_candidates: usize,
    rng: &mut R,
) -> usize {
    let weights = |obs: &[usize]| {
        let mut w = vec![1.0; n_choices];
        for &o in obs {
            w[o] += 1.0;
        }
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect::<Vec<f64>>()
    };
    let l = weights(good);
    let g = weights(bad);
    let mut best = (f64::NEG_INFINITY, 0);
    for _ in 0..n_candidates.max(1) {
        let mut u: f64 = rng.random();
        let mut pick = n_choices - 1;
        for (i, p) in l.iter().enumerate() {
            if u < *p {
                pick = i;
                break;
            }
            u -= p;
        }
        let score = l[pick].ln() - g[pick].ln();
        if score > best.0 {
            best = (score, pick);
        }
    }
    best.1
}

/// Objective value a finished trial contributes, if any: the final value of a
/// complete trial or the last intermediate value of a pruned one.
fn observed_value(t: &Trial) -> Option<f64> {
    match t.state {
        TrialState::Complete => t.final_value,
        TrialState::Pruned => t.intermediate.last().map(|&(_, v)| v),
        _ => None,
    }
}

/// Number of finished trials that observed `spec` with the same definition.
pub fn observation_count(trials: &[Trial], spec: &ParamSpec) -> usize {
    trials
        .iter()
        .filter(|t| observed_value(t).is_some() && t.specs.get(&spec.name) == Some(&spec.kind))
        .count()
}

/// TPE proposal for `spec` from the finished trials. Complete trials are
/// ranked by objective and the best `ceil(gamma * n)` form the good group;
/// everything else, pruned trials included, is bad.
pub fn tpe_propose<R: Rng + ?Sized>(
    trials: &[Trial],
    direction: Direction,
    spec: &ParamSpec,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> ParamValue {
    let mut complete: Vec<(f64, usize, &ParamValue)> = Vec::new();
    let mut pruned: Vec<&ParamValue> = Vec::new();
    for t in trials {
        if t.specs.get(&spec.name) != Some(&spec.kind) {
            continue;
        }
        let (Some(value), Some(param)) = (observed_value(t), t.params.get(&spec.name)) else {
            continue;
        };
        match t.state {
            TrialState::Complete => complete.push((direction.score(value), t.id, param)),
            _ => pruned.push(param),
        }
    }
    let n = complete.len() + pruned.len();
    if n == 0 {
        return spec.sample_uniform(rng);
    }
    complete.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let n_good = ((cfg.gamma_fraction * n as f64).ceil() as usize).min(complete.len());
    let good: Vec<&ParamValue> = complete[..n_good].iter().map(|c| c.2).collect();
    let bad: Vec<&ParamValue> = complete[n_good..].iter().map(|c| c.2).chain(pruned).collect();

    match &spec.kind {
        ParamKind::FloatUniform { low, high } => {
            let f = |v: &[&ParamValue]| v.iter().filter_map(|p| p.as_f64()).collect::<Vec<_>>();
            let x = propose_continuous(&f(&good), &f(&bad), *low, *high, cfg.n_ei_candidates, rng);
            ParamValue::Float(x.clamp(*low, *high))
        }
        ParamKind::FloatLogUniform { low, high } => {
            let f = |v: &[&ParamValue]| v.iter().filter_map(|p| p.as_f64()).map(f64::ln).collect::<Vec<_>>();
            let x = propose_continuous(&f(&good), &f(&bad), low.ln(), high.ln(), cfg.n_ei_candidates, rng);
            ParamValue::Float(x.exp().clamp(*low, *high))
        }
        ParamKind::IntUniform { low, high } => {
            let f = |v: &[&ParamValue]| v.iter().filter_map(|p| p.as_f64()).collect::<Vec<_>>();
            let (lo, hi) = (*low as f64 - 0.5, *high as f64 + 0.5);
            let x = propose_continuous(&f(&good), &f(&bad), lo, hi, cfg.n_ei_candidates, rng);
            ParamValue::Int((x.round() as i64).clamp(*low, *high))
        }
        ParamKind::Categorical { choices } => {
            let idx = |v: &[&ParamValue]| {
                v.iter()
                    .filter_map(|p| p.as_str())
                    .filter_map(|s| choices.iter().position(|c| c == s))
                    .collect::<Vec<_>>()
            };
            let pick = propose_categorical(&idx(&good), &idx(&bad), choices.len(), cfg.n_ei_candidates, rng);
            ParamValue::Categorical(choices[pick].clone())
        }
    }
}
