//! End-to-end stages behind the command-line tool. Each stage reads a CSV,
//! writes its artifacts into the output directory and returns a summary.
//!
//! Every error maps to a process exit code through [`PipelineError::exit_code`]:
//! 0 success, 1 unexpected, 2 ingestion, 3 sampling, 4 tuning, 5 bench cells.

mod bench;
mod commands;
mod tune;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::data::{load_csv, prune_correlated, DataError, PruneReport, Table, DEFAULT_LABEL_COLUMN};
use crate::ensemble::{EnsembleError, VotingMode};
use crate::learners::{preset, LearnerError, ModelConfig, Preset};
use crate::metrics::{CvError, MetricsError, SamplingPolicy};
use crate::smote::SmoteConfig;
use crate::tabgan::{GanConfig, GanError};

pub use bench::{cmd_bench, render_text, BenchCell, BenchReport, VariantWeights, DATASET_LABELS, ENSEMBLE_LABEL};
pub use commands::{
    cmd_balance, cmd_evaluate, cmd_inspect, cmd_prune, cmd_train, BalanceSummary, DatasetSummary, EvaluateSummary,
    MemberSummary, TrainSummary, FEATURES_FILE, MANIFEST_FILE, MODEL_DIR,
};
pub use tune::{cmd_tune, load_search_space, shipped_search_space, BestParams, SearchSpace, TuneTarget};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("tuning failed: {0}")]
    Tuning(String),
    #[error("{failed} of {total} bench cells failed")]
    BenchCells { failed: usize, total: usize },
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Cv(CvError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Data(_) => 2,
            PipelineError::Sampling(_) => 3,
            PipelineError::Cv(CvError::Sampling { .. }) => 3,
            PipelineError::Tuning(_) => 4,
            PipelineError::BenchCells { .. } => 5,
            _ => 1,
        }
    }
}

impl From<CvError> for PipelineError {
    fn from(e: CvError) -> Self {
        PipelineError::Cv(e)
    }
}

impl From<crate::metrics::SamplingError> for PipelineError {
    fn from(e: crate::metrics::SamplingError) -> Self {
        PipelineError::Sampling(e.to_string())
    }
}

impl From<GanError> for PipelineError {
    fn from(e: GanError) -> Self {
        PipelineError::Sampling(e.to_string())
    }
}

/// Which sampler a single-policy stage (balance, train, tune) uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    None,
    Smote,
    #[default]
    Gan,
}

/// Run configuration, read from a TOML file; every field has a default.
/// The global `seed` replaces the seeds inside `[smote]` and `[gan]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub label_column: String,
    /// Drop near-duplicate columns before balancing and training.
    pub prune: bool,
    pub correlation_threshold: f64,
    pub policy: PolicyKind,
    pub smote: SmoteConfig,
    pub gan: GanConfig,
    pub folds: usize,
    /// Preset names, in report order.
    pub models: Vec<String>,
    /// Per-preset field overrides, e.g. `[overrides.xgb-paper] n_estimators = 50`.
    pub overrides: BTreeMap<String, Map<String, Value>>,
    /// `best_params.json` files from earlier tuning runs, applied after `overrides`.
    pub tuned_params: Vec<PathBuf>,
    pub ensemble_mode: VotingMode,
    /// Share of each fold's training rows held out to score members for voting weights.
    pub weight_holdout: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Balance the whole dataset before folding, so validation folds contain
    /// synthetic rows (matches the published protocol; inflates scores).
    pub paper_mode: bool,
    /// Bench on one stratified holdout of this size instead of k-fold CV.
    pub holdout_fraction: Option<f64>,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            label_column: DEFAULT_LABEL_COLUMN.to_string(),
            prune: true,
            correlation_threshold: 0.95,
            policy: PolicyKind::Gan,
            smote: SmoteConfig::default(),
            gan: GanConfig::default(),
            folds: 10,
            models: crate::learners::preset_names().into_iter().map(String::from).collect(),
            overrides: BTreeMap::new(),
            tuned_params: Vec::new(),
            ensemble_mode: VotingMode::Soft,
            weight_holdout: 0.2,
            seed: 101,
            out_dir: PathBuf::from("out"),
            paper_mode: false,
            holdout_fraction: None,
            jobs: 0,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        PipelineConfig::from_toml(&read_text(path)?)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if !(self.correlation_threshold > 0.0 && self.correlation_threshold <= 1.0) {
            return bad(format!("correlation_threshold must lie in (0, 1], got {}", self.correlation_threshold));
        }
        if !(self.weight_holdout > 0.0 && self.weight_holdout < 1.0) {
            return bad(format!("weight_holdout must lie in (0, 1), got {}", self.weight_holdout));
        }
        if let Some(f) = self.holdout_fraction {
            if !(f > 0.0 && f < 1.0) {
                return bad(format!("holdout_fraction must lie in (0, 1), got {f}"));
            }
        }
        if self.models.is_empty() {
            return bad("at least one model is required".into());
        }
        for name in self.overrides.keys() {
            if !self.models.contains(name) {
                return bad(format!("overrides given for {name:?}, which is not in models"));
            }
        }
        self.gan.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn input_path(&self) -> Result<&Path, PipelineError> {
        self.input.as_deref().ok_or_else(|| PipelineError::Config("no input file given".into()))
    }

    pub fn smote_policy(&self) -> SamplingPolicy {
        SamplingPolicy::Smote(SmoteConfig { seed: self.seed, ..self.smote.clone() })
    }

    pub fn gan_policy(&self) -> SamplingPolicy {
        SamplingPolicy::Gan(GanConfig { seed: self.seed, ..self.gan.clone() })
    }

    pub fn policy(&self) -> SamplingPolicy {
        match self.policy {
            PolicyKind::None => SamplingPolicy::None,
            PolicyKind::Smote => self.smote_policy(),
            PolicyKind::Gan => self.gan_policy(),
        }
    }

    /// The configured presets with overrides and tuned parameters applied.
    pub fn members(&self) -> Result<Vec<Preset>, PipelineError> {
        let tuned = self
            .tuned_params
            .iter()
            .map(|p| Ok(serde_json::from_str::<BestParams>(&read_text(p)?)?))
            .collect::<Result<Vec<_>, PipelineError>>()?;
        self.models
            .iter()
            .map(|name| {
                let mut p = self.member(name)?;
                for best in tuned.iter().filter(|b| &b.target == name) {
                    p.config = apply_to_model(&p.config, &best.params)?;
                }
                Ok(p)
            })
            .collect()
    }

    /// One preset with its `overrides` applied (tuned parameters are not).
    pub fn member(&self, name: &str) -> Result<Preset, PipelineError> {
        let mut p = preset(name)?;
        if let Some(fields) = self.overrides.get(name) {
            p.config = apply_to_model(&p.config, fields)?;
        }
        Ok(p)
    }

    pub fn ensure_out_dir(&self) -> Result<&Path, PipelineError> {
        fs::create_dir_all(&self.out_dir).map_err(|source| PipelineError::Io { path: self.out_dir.clone(), source })?;
        Ok(&self.out_dir)
    }
}

/// Sets fields of a serializable config from `fields`. A string assigned to a
/// list field is read as comma-separated numbers ("32,288").
pub fn apply_fields<T>(config: &T, fields: &Map<String, Value>) -> Result<T, PipelineError>
where
    T: Serialize + serde::de::DeserializeOwned,
{
    let mut value = serde_json::to_value(config)?;
    let obj = value.as_object_mut().ok_or_else(|| PipelineError::Config("config is not a table".into()))?;
    for (key, v) in fields {
        let slot = obj.get_mut(key).ok_or_else(|| PipelineError::Config(format!("unknown field {key:?}")))?;
        *slot = match (&*slot, v) {
            (Value::Array(_), Value::String(s)) => Value::Array(
                s.split(',')
                    .map(|part| {
                        part.trim()
                            .parse::<u64>()
                            .map(Value::from)
                            .map_err(|_| PipelineError::Config(format!("{key}: {s:?} is not a list of integers")))
                    })
                    .collect::<Result<_, _>>()?,
            ),
            _ => v.clone(),
        };
    }
    serde_json::from_value(value).map_err(|e| PipelineError::Config(e.to_string()))
}

pub fn apply_to_model(config: &ModelConfig, fields: &Map<String, Value>) -> Result<ModelConfig, PipelineError> {
    let out = match config {
        ModelConfig::Gbdt(c) => ModelConfig::Gbdt(apply_fields(c, fields)?),
        ModelConfig::Etc(c) => ModelConfig::Etc(apply_fields(c, fields)?),
    };
    out.validate()?;
    Ok(out)
}

/// Reads the input CSV and, when enabled, prunes correlated columns.
pub fn load_input(cfg: &PipelineConfig, prune: bool) -> Result<(Table, Option<PruneReport>), PipelineError> {
    let t = load_csv(cfg.input_path()?, &cfg.label_column)?;
    if prune && cfg.prune {
        let (pruned, report) = prune_correlated(&t, cfg.correlation_threshold)?;
        Ok((pruned, Some(report)))
    } else {
        Ok((t, None))
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

/// Pretty JSON with a trailing newline.
pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}
