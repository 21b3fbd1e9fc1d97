use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::{load_input, read_text, write_json, PipelineConfig, PipelineError};
use crate::data::{class_counts, minority_label, stratified_kfold, write_csv, DataError, PruneReport, Table};
use crate::ensemble::{derive_weights, EnsembleModel, VotingMode};
use crate::metrics::{apply_policy, binary_metrics, cross_validate, ConfusionMatrix, MetricsReport};
use crate::tabgan::{fidelity_report, FidelityReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub rows: usize,
    pub features: usize,
    /// Rows per label, keyed "0" and "1".
    pub class_counts: BTreeMap<String, usize>,
    pub minority_label: u8,
    /// Majority rows per minority row; absent when the minority class is empty.
    pub imbalance_ratio: Option<f64>,
    pub constant_columns: Vec<String>,
}

impl DatasetSummary {
    pub fn of(t: &Table) -> Self {
        let counts = class_counts(t);
        let minority = minority_label(t);
        let (lo, hi) = (counts[&minority], counts[&(1 - minority)]);
        DatasetSummary {
            rows: t.row_count(),
            features: t.col_count(),
            class_counts: counts.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            minority_label: minority,
            imbalance_ratio: (lo > 0).then(|| hi as f64 / lo as f64),
            constant_columns: t.constant_columns().iter().map(|&j| t.feature_names()[j].clone()).collect(),
        }
    }

    /// One line such as `0: 3000 (67.2%), 1: 1465 (32.8%)`.
    pub fn class_line(&self) -> String {
        let total = self.rows.max(1) as f64;
        self.class_counts
            .iter()
            .map(|(label, n)| format!("{label}: {n} ({:.1}%)", 100.0 * *n as f64 / total))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Summarizes the input without modifying it; writes `summary.json`.
pub fn cmd_inspect(cfg: &PipelineConfig) -> Result<DatasetSummary, PipelineError> {
    let (t, _) = load_input(cfg, false)?;
    let summary = DatasetSummary::of(&t);
    write_json(&cfg.ensure_out_dir()?.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Drops correlated columns; writes `pruned.csv` and `prune_report.json`.
pub fn cmd_prune(cfg: &PipelineConfig) -> Result<PruneReport, PipelineError> {
    let cfg = PipelineConfig { prune: true, ..cfg.clone() };
    let (t, report) = load_input(&cfg, true)?;
    let report = report.expect("pruning was requested");
    let out = cfg.ensure_out_dir()?;
    write_csv(&t, out.join("pruned.csv"), &cfg.label_column)?;
    write_json(&out.join("prune_report.json"), &report)?;
    info!("kept {} columns, dropped {}", report.remaining_names.len(), report.dropped.len());
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceSummary {
    pub policy: String,
    pub before: DatasetSummary,
    pub after: DatasetSummary,
    pub synthetic_rows: usize,
    pub already_balanced: bool,
    /// Real minority rows against the generated ones (GAN policy only).
    pub fidelity: Option<FidelityReport>,
}

/// Applies the configured policy to the whole (pruned) input and writes
/// `balanced.csv` and `balance.json`; the GAN policy adds `gan_model.json`
/// and `fidelity.json`.
pub fn cmd_balance(cfg: &PipelineConfig) -> Result<BalanceSummary, PipelineError> {
    let (t, _) = load_input(cfg, true)?;
    let policy = cfg.policy();
    let before = DatasetSummary::of(&t);
    let counts = class_counts(&t);
    let already_balanced = counts[&0] == counts[&1];
    if already_balanced {
        warn!("classes are already balanced; writing the input unchanged");
    }
    let balanced = apply_policy(&t, &policy)?;
    let out = cfg.ensure_out_dir()?;
    write_csv(&balanced.table, out.join("balanced.csv"), &cfg.label_column)?;

    let mut fidelity = None;
    if let Some(model) = &balanced.gan {
        fs::write(out.join("gan_model.json"), model.to_json()?)
            .map_err(|source| PipelineError::Io { path: out.join("gan_model.json"), source })?;
        let n = balanced.table.row_count();
        let synthetic: Vec<usize> = (n - balanced.synthetic_rows..n).collect();
        let report = fidelity_report(&t.class_rows(minority_label(&t)), &balanced.table.select_rows(&synthetic))?;
        write_json(&out.join("fidelity.json"), &report)?;
        fidelity = Some(report);
    }
    let summary = BalanceSummary {
        policy: policy.name().to_string(),
        before,
        after: DatasetSummary::of(&balanced.table),
        synthetic_rows: balanced.synthetic_rows,
        already_balanced,
        fidelity,
    };
    write_json(&out.join("balance.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub name: String,
    pub label: String,
    /// Cross-validated scores that set the member's voting weight.
    pub cv: MetricsReport,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub policy: String,
    pub mode: VotingMode,
    pub members: Vec<MemberSummary>,
    pub feature_names: Vec<String>,
    pub manifest: PathBuf,
}

pub const MODEL_DIR: &str = "model";
pub const MANIFEST_FILE: &str = "ensemble.json";
pub const FEATURES_FILE: &str = "features.json";

/// Fits the weighted ensemble on the whole (pruned, balanced) input.
///
/// Member weights are their mean weighted F1 under k-fold cross-validation,
/// with the sampling policy applied inside each fold. Writes the ensemble
/// under `model/` plus `train.json`.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<TrainSummary, PipelineError> {
    let (t, _) = load_input(cfg, true)?;
    let members = cfg.members()?;
    let policy = cfg.policy();
    let folds = stratified_kfold(&t, cfg.folds, cfg.seed)?;

    let mut scores = Vec::with_capacity(members.len());
    for m in &members {
        let cv = cross_validate(&t, &folds, &m.config, &policy)?;
        info!("{}: cross-validated weighted F1 {:.4}", m.label, cv.mean.weighted_f1);
        scores.push(cv.mean);
    }
    let weights = derive_weights(&scores.iter().map(|r| r.weighted_f1).collect::<Vec<_>>())?;

    let balanced = apply_policy(&t, &policy)?;
    let fitted = members.iter().map(|m| m.config.fit(&balanced.table)).collect::<Result<Vec<_>, _>>()?;
    let model = EnsembleModel::new(fitted, weights.clone(), cfg.ensemble_mode)?;

    let dir = cfg.ensure_out_dir()?.join(MODEL_DIR);
    fs::create_dir_all(&dir).map_err(|source| PipelineError::Io { path: dir.clone(), source })?;
    let manifest = dir.join(MANIFEST_FILE);
    model.save(&manifest)?;
    write_json(&dir.join(FEATURES_FILE), &t.feature_names())?;

    let summary = TrainSummary {
        policy: policy.name().to_string(),
        mode: cfg.ensemble_mode,
        members: members
            .iter()
            .zip(scores)
            .zip(&weights)
            .map(|((m, cv), &weight)| MemberSummary { name: m.name.clone(), label: m.label.clone(), cv, weight })
            .collect(),
        feature_names: t.feature_names().to_vec(),
        manifest,
    };
    write_json(&cfg.out_dir.join("train.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateSummary {
    pub rows: usize,
    pub confusion: ConfusionMatrix,
    pub report: MetricsReport,
}

/// Scores a saved ensemble on the input CSV; writes `evaluation.json`.
/// `model_dir` defaults to `<out_dir>/model`.
pub fn cmd_evaluate(cfg: &PipelineConfig, model_dir: Option<&Path>) -> Result<EvaluateSummary, PipelineError> {
    let default_dir = cfg.out_dir.join(MODEL_DIR);
    let dir = model_dir.unwrap_or(&default_dir);
    let (t, _) = load_input(cfg, false)?;
    let names: Vec<String> = serde_json::from_str(&read_text(&dir.join(FEATURES_FILE))?)?;
    let columns = names
        .iter()
        .map(|n| {
            t.feature_names()
                .iter()
                .position(|c| c == n)
                .ok_or_else(|| DataError::ShapeMismatch(format!("model column {n:?} missing from input")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let t = t.select_columns(&columns);
    let model = EnsembleModel::load(&dir.join(MANIFEST_FILE))?;
    let predicted = model.predict(t.features().view())?;
    let confusion = ConfusionMatrix::from_labels(t.labels(), &predicted)?;
    let report = binary_metrics(t.labels(), &predicted)?;
    let summary = EvaluateSummary { rows: t.row_count(), confusion, report };
    write_json(&cfg.ensure_out_dir()?.join("evaluation.json"), &summary)?;
    Ok(summary)
}
