use std::fmt::Write as _;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::{load_input, write_json, write_text, PipelineConfig, PipelineError};
use crate::data::{holdout_assignment, stratified_kfold, Table};
use crate::metrics::{apply_policy, cross_validate_ensemble_on, EnsembleCvReport, MetricsReport, SamplingPolicy};

pub const DATASET_LABELS: [&str; 3] = ["Imbalanced", "Balanced (SMOTE)", "Balanced (GAN)"];
pub const ENSEMBLE_LABEL: &str = "Weighted Ensembled";

/// One (dataset, model) result; exactly one of `report` and `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub dataset: String,
    pub model: String,
    pub report: Option<MetricsReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantWeights {
    pub dataset: String,
    /// Member voting weights, one list per fold.
    pub per_fold: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: usize,
    pub features: usize,
    /// Number of validation folds; 1 for a holdout run.
    pub folds: usize,
    pub holdout_fraction: Option<f64>,
    pub seed: u64,
    pub paper_mode: bool,
    pub models: Vec<String>,
    pub cells: Vec<BenchCell>,
    pub weights: Vec<VariantWeights>,
}

impl BenchReport {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }

    pub fn cell(&self, dataset: &str, model: &str) -> Option<&BenchCell> {
        self.cells.iter().find(|c| c.dataset == dataset && c.model == model)
    }
}

fn run_variant(cfg: &PipelineConfig, t: &Table, policy: &SamplingPolicy) -> Result<EnsembleCvReport, PipelineError> {
    let configs: Vec<_> = cfg.members()?.into_iter().map(|m| m.config).collect();
    // Paper mode balances first and folds second, so validation folds contain synthetic rows.
    let (data, policy) = if cfg.paper_mode {
        (apply_policy(t, policy)?.table, SamplingPolicy::None)
    } else {
        (t.clone(), policy.clone())
    };
    let (folds, validate_on) = match cfg.holdout_fraction {
        Some(f) => (holdout_assignment(&data, f, cfg.seed)?, vec![0]),
        None => (stratified_kfold(&data, cfg.folds, cfg.seed)?, (0..cfg.folds).collect()),
    };
    Ok(cross_validate_ensemble_on(&data, &folds, &validate_on, &configs, &policy, cfg.ensemble_mode, cfg.weight_holdout)?)
}

/// Cross-validates every model and the weighted ensemble on the imbalanced,
/// SMOTE-balanced and GAN-balanced variants of the (pruned) input.
///
/// Writes `bench.json`, `bench.csv` and `bench.txt`. A variant that fails
/// marks all of its cells failed; the others still run, and the call then
/// returns [`PipelineError::BenchCells`].
pub fn cmd_bench(cfg: &PipelineConfig) -> Result<BenchReport, PipelineError> {
    let (t, _) = load_input(cfg, true)?;
    let labels: Vec<String> = cfg.members()?.into_iter().map(|m| m.label).collect();
    let policies = [SamplingPolicy::None, cfg.smote_policy(), cfg.gan_policy()];

    let mut cells = Vec::new();
    let mut weights = Vec::new();
    for (dataset, policy) in DATASET_LABELS.iter().zip(&policies) {
        info!("bench: {dataset}");
        let names = labels.iter().map(String::as_str).chain([ENSEMBLE_LABEL]);
        match run_variant(cfg, &t, policy) {
            Ok(r) => {
                let reports = r.members.iter().chain([&r.ensemble]);
                for (model, cv) in names.zip(reports) {
                    cells.push(BenchCell {
                        dataset: dataset.to_string(),
                        model: model.to_string(),
                        report: Some(cv.mean.clone()),
                        error: None,
                    });
                }
                weights.push(VariantWeights { dataset: dataset.to_string(), per_fold: r.weights });
            }
            Err(e) => {
                warn!("bench: {dataset} failed: {e}");
                for model in names {
                    cells.push(BenchCell {
                        dataset: dataset.to_string(),
                        model: model.to_string(),
                        report: None,
                        error: Some(e.to_string()),
                    });
                }
            }
        }
    }
    let report = BenchReport {
        rows: t.row_count(),
        features: t.col_count(),
        folds: if cfg.holdout_fraction.is_some() { 1 } else { cfg.folds },
        holdout_fraction: cfg.holdout_fraction,
        seed: cfg.seed,
        paper_mode: cfg.paper_mode,
        models: labels,
        cells,
        weights,
    };
    let out = cfg.ensure_out_dir()?;
    write_json(&out.join("bench.json"), &report)?;
    write_text(&out.join("bench.csv"), &render_csv(&report)?)?;
    write_text(&out.join("bench.txt"), &render_text(&report))?;
    match report.failed_cells() {
        0 => Ok(report),
        failed => Err(PipelineError::BenchCells { failed, total: report.cells.len() }),
    }
}

const CSV_HEADER: [&str; 9] =
    ["dataset", "model", "accuracy", "precision", "recall", "f1", "weighted_f1", "rmse", "error"];

fn render_csv(report: &BenchReport) -> Result<String, PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| PipelineError::Config(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for c in &report.cells {
        let mut rec = vec![c.dataset.clone(), c.model.clone()];
        match &c.report {
            Some(r) => rec.extend(
                [r.accuracy, r.precision, r.recall, r.f1, r.weighted_f1, r.rmse].iter().map(|v| format!("{v:.6}")),
            ),
            None => rec.extend(std::iter::repeat_n(String::new(), 6)),
        }
        rec.push(c.error.clone().unwrap_or_default());
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Plain-text tables, scores to six decimals: one block per dataset with a
/// row per model, then RMSE with a row per model and a column per dataset.
pub fn render_text(report: &BenchReport) -> String {
    let mut s = String::new();
    let width = report.models.iter().map(String::len).chain([ENSEMBLE_LABEL.len()]).max().unwrap_or(0);
    let protocol = match report.holdout_fraction {
        Some(f) => format!("holdout {f}"),
        None => format!("{}-fold", report.folds),
    };
    let mode = if report.paper_mode { ", paper mode" } else { "" };
    let _ = writeln!(s, "{} rows, {} features, {protocol}, seed {}{mode}", report.rows, report.features, report.seed);
    let models: Vec<&str> = report.models.iter().map(String::as_str).chain([ENSEMBLE_LABEL]).collect();
    for dataset in DATASET_LABELS {
        let _ = writeln!(s, "\n{dataset}");
        let _ = writeln!(
            s,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}  {:>11}",
            "Model", "Accuracy", "Precision", "Recall", "F1", "Weighted F1"
        );
        for model in &models {
            let Some(c) = report.cell(dataset, model) else { continue };
            match &c.report {
                Some(r) => {
                    let _ = writeln!(
                        s,
                        "{:<width$}  {:>9.6}  {:>9.6}  {:>9.6}  {:>9.6}  {:>11.6}",
                        c.model, r.accuracy, r.precision, r.recall, r.f1, r.weighted_f1
                    );
                }
                None => {
                    let _ = writeln!(s, "{:<width$}  failed: {}", c.model, c.error.as_deref().unwrap_or(""));
                }
            }
        }
    }
    let _ = writeln!(s, "\nRMSE");
    let _ = write!(s, "{:<width$}", "Model");
    for dataset in DATASET_LABELS {
        let _ = write!(s, "  {dataset:>16}");
    }
    let _ = writeln!(s);
    for model in &models {
        let _ = write!(s, "{model:<width$}");
        for dataset in DATASET_LABELS {
            match report.cell(dataset, model).and_then(|c| c.report.as_ref()) {
                Some(r) => {
                    let _ = write!(s, "  {:>16.6}", r.rmse);
                }
                None => {
                    let _ = write!(s, "  {:>16}", "failed");
                }
            }
        }
        let _ = writeln!(s);
    }
    s
}
