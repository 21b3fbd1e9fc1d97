//! Tree-based binary classifiers: gradient boosting (second- and first-order)
//! and extremely randomized trees, with JSON persistence and named presets.

mod extra_trees;
mod gbdt;
mod tree;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Table};

pub use extra_trees::{fit_extra_trees, EtcConfig, ForestModel, MaxFeatures};
pub use gbdt::{
    fit_boosting_tree, fit_gbdt, leaf_value, log_loss, soft_threshold, split_gain, GbdtConfig,
    GbdtModel, Growth, Order,
};
pub use tree::{midpoint, BoostTree, ForestTree, Tree, TreeNode};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("training data holds a single class")]
    SingleClassInput,
    #[error("model expects {expected} features, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid learner config: {0}")]
    InvalidConfig(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("malformed preset {name}: {reason}")]
    MalformedPreset { name: String, reason: String },
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Data(#[from] DataError),
}

pub(crate) fn require_both_classes(labels: &[u8]) -> Result<(), LearnerError> {
    let ones = labels.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == labels.len() {
        Err(LearnerError::SingleClassInput)
    } else {
        Ok(())
    }
}

/// Configuration for either learner family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelConfig {
    Gbdt(GbdtConfig),
    Etc(EtcConfig),
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        match self {
            ModelConfig::Gbdt(c) => c.validate(),
            ModelConfig::Etc(c) => c.validate(),
        }
    }

    pub fn fit(&self, t: &Table) -> Result<TrainedModel, LearnerError> {
        match self {
            ModelConfig::Gbdt(c) => fit_gbdt(t, c).map(TrainedModel::Gbdt),
            ModelConfig::Etc(c) => fit_extra_trees(t, c).map(TrainedModel::ExtraTrees),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ModelConfig::Gbdt(c) => c.seed,
            ModelConfig::Etc(c) => c.seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            ModelConfig::Gbdt(c) => c.seed = seed,
            ModelConfig::Etc(c) => c.seed = seed,
        }
        self
    }
}

/// Fitted classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    Gbdt(GbdtModel),
    ExtraTrees(ForestModel),
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Gbdt(m) => m.n_features,
            TrainedModel::ExtraTrees(m) => m.n_features,
        }
    }

    pub fn config(&self) -> ModelConfig {
        match self {
            TrainedModel::Gbdt(m) => ModelConfig::Gbdt(m.config.clone()),
            TrainedModel::ExtraTrees(m) => ModelConfig::Etc(m.config.clone()),
        }
    }

    pub fn to_json(&self) -> Result<String, LearnerError> {
        Ok(serde_json::to_string(self)?)
    }

    /// Parses a model and checks its trees against its feature count.
    pub fn from_json(text: &str) -> Result<Self, LearnerError> {
        let m: TrainedModel = serde_json::from_str(text)?;
        let d = m.n_features();
        let ok = match &m {
            TrainedModel::Gbdt(g) => g.trees.iter().all(|t| t.is_well_formed(d)),
            TrainedModel::ExtraTrees(f) => !f.trees.is_empty() && f.trees.iter().all(|t| t.is_well_formed(d)),
        };
        if !ok {
            return Err(LearnerError::InvalidConfig("model trees are malformed".into()));
        }
        Ok(m)
    }

    pub fn predict_proba(&self, rows: ArrayView2<'_, f64>) -> Result<Vec<[f64; 2]>, LearnerError> {
        predict_proba(self, rows)
    }

    /// Hard labels: class 1 when its probability is at least one half.
    pub fn predict(&self, rows: ArrayView2<'_, f64>) -> Result<Vec<u8>, LearnerError> {
        Ok(predict_proba(self, rows)?.iter().map(|p| u8::from(p[1] >= 0.5)).collect())
    }
}

/// Per-row `[P(class 0), P(class 1)]`.
pub fn predict_proba(m: &TrainedModel, rows: ArrayView2<'_, f64>) -> Result<Vec<[f64; 2]>, LearnerError> {
    if rows.ncols() != m.n_features() {
        return Err(LearnerError::ShapeMismatch { expected: m.n_features(), got: rows.ncols() });
    }
    let out = match m {
        TrainedModel::Gbdt(g) => rows
            .outer_iter()
            .map(|r| {
                let p1 = 1.0 / (1.0 + (-g.margin(r)).exp());
                [1.0 - p1, p1]
            })
            .collect(),
        TrainedModel::ExtraTrees(f) => rows.outer_iter().map(|r| f.proba(r)).collect(),
    };
    Ok(out)
}

/// Split gains (boosting) or impurity decreases (forest) summed per feature
/// and normalized to sum to 1. All zeros when the model never splits.
pub fn feature_importance(m: &TrainedModel) -> Vec<f64> {
    let mut totals = vec![0.0; m.n_features()];
    match m {
        TrainedModel::Gbdt(g) => g.used_trees().iter().for_each(|t| t.add_gains(&mut totals)),
        TrainedModel::ExtraTrees(f) => f.trees.iter().for_each(|t| t.add_gains(&mut totals)),
    }
    let sum: f64 = totals.iter().sum();
    if sum > 0.0 {
        totals.iter_mut().for_each(|v| *v /= sum);
    }
    totals
}

/// Convenience wrapper for callers holding an owned matrix.
pub fn predict_positive(m: &TrainedModel, rows: &Array2<f64>) -> Result<Vec<f64>, LearnerError> {
    Ok(predict_proba(m, rows.view())?.into_iter().map(|p| p[1]).collect())
}

/// A named learner configuration shipped with the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    /// Display name used in reports, e.g. "XGB".
    pub label: String,
    pub config: ModelConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetFile {
    name: String,
    label: String,
    gbdt: Option<GbdtConfig>,
    etc: Option<EtcConfig>,
}

const PRESET_FILES: [(&str, &str); 5] = [
    ("xgb-paper", include_str!("../../presets/xgb-paper.toml")),
    ("lgbm-paper", include_str!("../../presets/lgbm-paper.toml")),
    ("etc-paper", include_str!("../../presets/etc-paper.toml")),
    ("catboost-paper", include_str!("../../presets/catboost-paper.toml")),
    ("gbc-paper", include_str!("../../presets/gbc-paper.toml")),
];

/// Preset names in report order.
pub fn preset_names() -> Vec<&'static str> {
    PRESET_FILES.iter().map(|(n, _)| *n).collect()
}

pub fn parse_preset(name: &str, text: &str) -> Result<Preset, LearnerError> {
    let malformed = |reason: String| LearnerError::MalformedPreset { name: name.to_string(), reason };
    let file: PresetFile = toml::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let config = match (file.gbdt, file.etc) {
        (Some(g), None) => ModelConfig::Gbdt(g),
        (None, Some(e)) => ModelConfig::Etc(e),
        _ => return Err(malformed("exactly one of [gbdt] or [etc] is required".into())),
    };
    config.validate()?;
    Ok(Preset { name: file.name, label: file.label, config })
}

pub fn preset(name: &str) -> Result<Preset, LearnerError> {
    let (_, text) = PRESET_FILES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| LearnerError::UnknownPreset(name.to_string()))?;
    parse_preset(name, text)
}

/// All shipped presets, in report order.
pub fn paper_presets() -> Vec<Preset> {
    PRESET_FILES.iter().map(|(n, _)| preset(n).expect("shipped presets parse")).collect()
}

#[cfg(test)]
mod tests;
