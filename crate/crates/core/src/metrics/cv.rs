//! k-fold evaluation with the sampling policy applied to training rows only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{binary_metrics, MetricsError, MetricsReport};
use crate::data::{class_counts, minority_label, stratified_split_indices, DataError, FoldAssignment, Table};
use crate::ensemble::{combine_hard, combine_soft, derive_weights, EnsembleError, VotingMode};
use crate::learners::{LearnerError, ModelConfig};
use crate::rng;
use crate::smote::{smote_balance, SmoteConfig, SmoteError};
use crate::tabgan::{sample_synthetic, train_gan, GanConfig, GanError, GanModel};

const FOLD_SEED_TAG: u64 = 0x666f_6c64;
const WEIGHT_SPLIT_TAG: u64 = 0x7767_6874;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplingPolicy {
    #[default]
    None,
    Smote(SmoteConfig),
    Gan(GanConfig),
}

impl SamplingPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            SamplingPolicy::None => "none",
            SamplingPolicy::Smote(_) => "smote",
            SamplingPolicy::Gan(_) => "gan",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            SamplingPolicy::None => 0,
            SamplingPolicy::Smote(c) => c.seed,
            SamplingPolicy::Gan(c) => c.seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            SamplingPolicy::None => SamplingPolicy::None,
            SamplingPolicy::Smote(c) => SamplingPolicy::Smote(SmoteConfig { seed, ..c.clone() }),
            SamplingPolicy::Gan(c) => SamplingPolicy::Gan(GanConfig { seed, ..c.clone() }),
        }
    }
}

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error(transparent)]
    Smote(#[from] SmoteError),
    #[error(transparent)]
    Gan(#[from] GanError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// A training table after its sampling policy ran. Original rows come first;
/// the last `synthetic_rows` rows are generated.
#[derive(Debug, Clone)]
pub struct Balanced {
    pub table: Table,
    pub synthetic_rows: usize,
    /// The fitted generator, for the GAN policy.
    pub gan: Option<GanModel>,
}

/// Grows the minority class to the majority count. The GAN is trained on the
/// minority rows only and asked for exactly the missing rows.
pub fn apply_policy(t: &Table, policy: &SamplingPolicy) -> Result<Balanced, SamplingError> {
    let counts = class_counts(t);
    let minority = minority_label(t);
    let missing = counts[&(1 - minority)] - counts[&minority];
    let unchanged = || Balanced { table: t.clone(), synthetic_rows: 0, gan: None };
    match policy {
        SamplingPolicy::None => Ok(unchanged()),
        SamplingPolicy::Smote(cfg) => {
            let table = smote_balance(t, cfg)?;
            let synthetic_rows = table.row_count() - t.row_count();
            Ok(Balanced { table, synthetic_rows, gan: None })
        }
        SamplingPolicy::Gan(cfg) => {
            if missing == 0 {
                return Ok(unchanged());
            }
            let model = train_gan(&t.class_rows(minority), cfg)?;
            let synthetic = sample_synthetic(&model, missing, cfg.seed)?;
            Ok(Balanced { table: t.concat(&synthetic)?, synthetic_rows: missing, gan: Some(model) })
        }
    }
}

#[derive(Debug, Error)]
pub enum CvError {
    #[error("fold {fold}: sampling failed: {source}")]
    Sampling {
        fold: usize,
        #[source]
        source: SamplingError,
    },
    #[error("fold {fold}: {source}")]
    Learner {
        fold: usize,
        #[source]
        source: LearnerError,
    },
    #[error("fold {fold}: {source}")]
    Ensemble {
        fold: usize,
        #[source]
        source: EnsembleError,
    },
    #[error("fold {fold}: {source}")]
    Metrics { fold: usize, source: MetricsError },
    #[error("fold assignment covers {folds} rows but the table has {rows}")]
    FoldMismatch { folds: usize, rows: usize },
    #[error("no models to evaluate")]
    NoMembers,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    /// Real training rows before sampling.
    pub train_rows: usize,
    pub synthetic_rows: usize,
    pub validation_rows: usize,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldReport>,
    pub mean: MetricsReport,
}

impl CvReport {
    fn from_folds(folds: Vec<FoldReport>) -> Result<Self, CvError> {
        let reports: Vec<MetricsReport> = folds.iter().map(|f| f.report.clone()).collect();
        let mean = MetricsReport::mean(&reports).map_err(|source| CvError::Metrics { fold: 0, source })?;
        Ok(CvReport { folds, mean })
    }
}

struct FoldData {
    train: Table,
    valid: Table,
    balanced: Balanced,
}

fn check_cover(t: &Table, folds: &FoldAssignment) -> Result<(), CvError> {
    if folds.fold_of_row.len() != t.row_count() {
        return Err(CvError::FoldMismatch { folds: folds.fold_of_row.len(), rows: t.row_count() });
    }
    Ok(())
}

fn prepare_fold(t: &Table, folds: &FoldAssignment, policy: &SamplingPolicy, fold: usize) -> Result<FoldData, CvError> {
    let train = t.select_rows(&folds.train_indices(fold));
    let valid = t.select_rows(&folds.validation_indices(fold));
    let fold_policy = policy.with_seed(rng::derive_seed(policy.seed(), FOLD_SEED_TAG + fold as u64));
    let balanced = apply_policy(&train, &fold_policy).map_err(|source| CvError::Sampling { fold, source })?;
    Ok(FoldData { train, valid, balanced })
}

fn fold_report(fold: usize, data: &FoldData, predicted: &[u8]) -> Result<FoldReport, CvError> {
    let report = binary_metrics(data.valid.labels(), predicted).map_err(|source| CvError::Metrics { fold, source })?;
    Ok(FoldReport {
        fold,
        train_rows: data.train.row_count(),
        synthetic_rows: data.balanced.synthetic_rows,
        validation_rows: data.valid.row_count(),
        report,
    })
}

/// Trains on every fold but `fold` (after sampling) and scores on `fold`.
pub fn evaluate_fold(
    t: &Table,
    folds: &FoldAssignment,
    model: &ModelConfig,
    policy: &SamplingPolicy,
    fold: usize,
) -> Result<FoldReport, CvError> {
    check_cover(t, folds)?;
    let data = prepare_fold(t, folds, policy, fold)?;
    let fitted = model.fit(&data.balanced.table).map_err(|source| CvError::Learner { fold, source })?;
    let predicted = fitted.predict(data.valid.features().view()).map_err(|source| CvError::Learner { fold, source })?;
    fold_report(fold, &data, &predicted)
}

/// Folds run in parallel; results, and the first error if any, are taken in fold order.
pub fn cross_validate(
    t: &Table,
    folds: &FoldAssignment,
    model: &ModelConfig,
    policy: &SamplingPolicy,
) -> Result<CvReport, CvError> {
    cross_validate_with(t, folds, model, policy, |_, _, _| {})
}

/// As [`cross_validate`], handing `inspect(fold, training rows after sampling,
/// validation rows)` each fold's data before training.
pub fn cross_validate_with(
    t: &Table,
    folds: &FoldAssignment,
    model: &ModelConfig,
    policy: &SamplingPolicy,
    inspect: impl Fn(usize, &Table, &Table) + Sync,
) -> Result<CvReport, CvError> {
    check_cover(t, folds)?;
    let reports = (0..folds.k)
        .into_par_iter()
        .map(|fold| {
            let data = prepare_fold(t, folds, policy, fold)?;
            inspect(fold, &data.balanced.table, &data.valid);
            let fitted = model.fit(&data.balanced.table).map_err(|source| CvError::Learner { fold, source })?;
            let predicted =
                fitted.predict(data.valid.features().view()).map_err(|source| CvError::Learner { fold, source })?;
            fold_report(fold, &data, &predicted)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    CvReport::from_folds(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleCvReport {
    /// One report per member, in member order.
    pub members: Vec<CvReport>,
    pub ensemble: CvReport,
    /// Voting weights used in each fold.
    pub weights: Vec<Vec<f64>>,
}

/// Evaluates every member and their weighted vote on the same folds.
///
/// Voting weights come from training data only: inside each fold, members are
/// refit on a stratified `1 - weight_holdout` share of the real training rows
/// (sampled by the same policy) and scored by weighted F1 on the held-out rest.
pub fn cross_validate_ensemble(
    t: &Table,
    folds: &FoldAssignment,
    members: &[ModelConfig],
    policy: &SamplingPolicy,
    mode: VotingMode,
    weight_holdout: f64,
) -> Result<EnsembleCvReport, CvError> {
    let all: Vec<usize> = (0..folds.k).collect();
    cross_validate_ensemble_on(t, folds, &all, members, policy, mode, weight_holdout)
}

/// As [`cross_validate_ensemble`], validating only on the listed folds
/// (a single fold gives a plain holdout evaluation).
pub fn cross_validate_ensemble_on(
    t: &Table,
    folds: &FoldAssignment,
    validate_on: &[usize],
    members: &[ModelConfig],
    policy: &SamplingPolicy,
    mode: VotingMode,
    weight_holdout: f64,
) -> Result<EnsembleCvReport, CvError> {
    check_cover(t, folds)?;
    if members.is_empty() {
        return Err(CvError::NoMembers);
    }
    let per_fold = validate_on
        .par_iter()
        .map(|&fold| ensemble_fold(t, folds, members, policy, mode, weight_holdout, fold))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let mut member_folds: Vec<Vec<FoldReport>> = vec![Vec::new(); members.len()];
    let mut ensemble_folds = Vec::new();
    let mut weights = Vec::new();
    for (member_reports, ensemble_report, w) in per_fold {
        for (slot, r) in member_folds.iter_mut().zip(member_reports) {
            slot.push(r);
        }
        ensemble_folds.push(ensemble_report);
        weights.push(w);
    }
    Ok(EnsembleCvReport {
        members: member_folds.into_iter().map(CvReport::from_folds).collect::<Result<_, _>>()?,
        ensemble: CvReport::from_folds(ensemble_folds)?,
        weights,
    })
}

type EnsembleFold = (Vec<FoldReport>, FoldReport, Vec<f64>);

fn ensemble_fold(
    t: &Table,
    folds: &FoldAssignment,
    members: &[ModelConfig],
    policy: &SamplingPolicy,
    mode: VotingMode,
    weight_holdout: f64,
    fold: usize,
) -> Result<EnsembleFold, CvError> {
    let data = prepare_fold(t, folds, policy, fold)?;
    let weights = holdout_weights(&data.train, members, policy, weight_holdout, fold)?;
    let learner = |source| CvError::Learner { fold, source };

    let mut probs = Vec::with_capacity(members.len());
    let mut reports = Vec::with_capacity(members.len());
    for m in members {
        let fitted = m.fit(&data.balanced.table).map_err(learner)?;
        let p = fitted.predict_proba(data.valid.features().view()).map_err(learner)?;
        let labels: Vec<u8> = p.iter().map(|q| u8::from(q[1] >= 0.5)).collect();
        reports.push(fold_report(fold, &data, &labels)?);
        probs.push(p);
    }
    let ensemble_err = |source| CvError::Ensemble { fold, source };
    let voted: Vec<u8> = match mode {
        VotingMode::Soft => combine_soft(&probs, &weights).map_err(ensemble_err)?.into_iter().map(|(_, y)| y).collect(),
        VotingMode::Hard => {
            let labels: Vec<Vec<u8>> =
                probs.iter().map(|p| p.iter().map(|q| u8::from(q[1] >= 0.5)).collect()).collect();
            combine_hard(&labels, &weights).map_err(ensemble_err)?
        }
    };
    Ok((reports, fold_report(fold, &data, &voted)?, weights))
}

fn holdout_weights(
    train: &Table,
    members: &[ModelConfig],
    policy: &SamplingPolicy,
    holdout: f64,
    fold: usize,
) -> Result<Vec<f64>, CvError> {
    let seed = rng::derive_seed(policy.seed(), WEIGHT_SPLIT_TAG + fold as u64);
    let (inner, held) = stratified_split_indices(train, holdout, seed)
        .map_err(|e| CvError::Sampling { fold, source: e.into() })?;
    let inner = train.select_rows(&inner);
    let held = train.select_rows(&held);
    let balanced = apply_policy(&inner, &policy.with_seed(seed)).map_err(|source| CvError::Sampling { fold, source })?;
    let mut scores = Vec::with_capacity(members.len());
    for m in members {
        let learner = |source| CvError::Learner { fold, source };
        let fitted = m.fit(&balanced.table).map_err(learner)?;
        let predicted = fitted.predict(held.features().view()).map_err(learner)?;
        let report = binary_metrics(held.labels(), &predicted).map_err(|source| CvError::Metrics { fold, source })?;
        scores.push(report.weighted_f1);
    }
    derive_weights(&scores).map_err(|source| CvError::Ensemble { fold, source })
}
