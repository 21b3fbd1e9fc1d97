use std::path::Path;

use log::info;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{apply_fields, apply_to_model, load_input, read_text, write_json, PipelineConfig, PipelineError};
use crate::data::{minority_label, stratified_kfold, FoldAssignment, Table};
use crate::hyperopt::{
    best_trial, run_study, run_study_concurrent, Direction, ParamSpec, ParamValue, PruneDecision, Study, TrialError,
    TrialHandle, TrialState,
};
use crate::learners::{preset_names, ModelConfig};
use crate::metrics::{evaluate_fold, SamplingPolicy};
use crate::tabgan::{column_std, fidelity_report, sample_synthetic, train_gan, GanConfig};

/// A named list of parameter ranges, read from TOML:
///
/// ```toml
/// target = "xgb-paper"
///
/// [[param]]
/// name = "learning_rate"
/// kind = "float_log_uniform"
/// low = 0.01
/// high = 0.3
/// ```
///
/// Parameter names are config field names. Categorical choices assigned to
/// list fields are comma-separated integers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub target: String,
    pub param: Vec<ParamSpec>,
}

const SHIPPED_SPACES: [(&str, &str); 6] = [
    ("gan", include_str!("../../search_spaces/gan.toml")),
    ("xgb-paper", include_str!("../../search_spaces/xgb-paper.toml")),
    ("lgbm-paper", include_str!("../../search_spaces/lgbm-paper.toml")),
    ("etc-paper", include_str!("../../search_spaces/etc-paper.toml")),
    ("catboost-paper", include_str!("../../search_spaces/catboost-paper.toml")),
    ("gbc-paper", include_str!("../../search_spaces/gbc-paper.toml")),
];

impl SearchSpace {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let space: SearchSpace = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        TuneTarget::parse(&space.target)?;
        if space.param.is_empty() {
            return Err(PipelineError::Config("search space has no parameters".into()));
        }
        for p in &space.param {
            p.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        Ok(space)
    }
}

pub fn shipped_search_space(target: &str) -> Result<SearchSpace, PipelineError> {
    let (_, text) = SHIPPED_SPACES
        .iter()
        .find(|(n, _)| *n == target)
        .ok_or_else(|| PipelineError::Config(format!("no search space shipped for {target:?}")))?;
    SearchSpace::from_toml(text)
}

pub fn load_search_space(path: &Path) -> Result<SearchSpace, PipelineError> {
    SearchSpace::from_toml(&read_text(path)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TuneTarget {
    Gan,
    Model(String),
}

impl TuneTarget {
    pub fn parse(name: &str) -> Result<Self, PipelineError> {
        if name == "gan" {
            Ok(TuneTarget::Gan)
        } else if preset_names().contains(&name) {
            Ok(TuneTarget::Model(name.to_string()))
        } else {
            Err(PipelineError::Config(format!(
                "unknown tuning target {name:?}; expected \"gan\" or one of {:?}",
                preset_names()
            )))
        }
    }
}

/// The winning trial, in the form `tuned_params` in the run config accepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestParams {
    pub target: String,
    pub direction: Direction,
    pub value: f64,
    pub trial: usize,
    pub params: Map<String, Value>,
}

fn to_fields(specs: &[ParamSpec], trial: &mut TrialHandle<'_>) -> Result<Map<String, Value>, TrialError> {
    let mut fields = Map::new();
    for spec in specs {
        let v = match trial.suggest(spec)? {
            ParamValue::Int(i) => Value::from(i),
            ParamValue::Float(f) => Value::from(f),
            ParamValue::Categorical(s) => Value::from(s),
        };
        fields.insert(spec.name.clone(), v);
    }
    Ok(fields)
}

fn failed(e: impl std::fmt::Display) -> TrialError {
    TrialError::Failed(e.to_string())
}

/// Fidelity of a GAN trained on the minority rows: the negated overall gap
/// between those rows and as many generated ones.
fn gan_objective(minority: &Table, base: &GanConfig, space: &[ParamSpec], trial: &mut TrialHandle<'_>) -> Result<f64, TrialError> {
    let cfg: GanConfig = apply_fields(base, &to_fields(space, trial)?).map_err(failed)?;
    cfg.validate().map_err(failed)?;
    let model = train_gan(minority, &cfg).map_err(failed)?;
    let synthetic = sample_synthetic(&model, minority.row_count(), cfg.seed).map_err(failed)?;
    let report = fidelity_report(minority, &synthetic).map_err(failed)?;
    Ok(-report.overall_gap(&column_std(minority)))
}

/// Mean cross-validated weighted F1. The running mean is reported after each
/// fold so the median rule can stop weak trials early.
fn model_objective(
    t: &Table,
    folds: &FoldAssignment,
    base: &ModelConfig,
    policy: &SamplingPolicy,
    space: &[ParamSpec],
    trial: &mut TrialHandle<'_>,
) -> Result<f64, TrialError> {
    let model = apply_to_model(base, &to_fields(space, trial)?).map_err(failed)?;
    let mut sum = 0.0;
    for fold in 0..folds.k {
        sum += evaluate_fold(t, folds, &model, policy, fold).map_err(failed)?.report.weighted_f1;
        let running = sum / (fold + 1) as f64;
        if trial.report(fold as u64, running)? == PruneDecision::Prune {
            return Err(TrialError::Pruned);
        }
    }
    Ok(sum / folds.k as f64)
}

/// Searches `target`'s parameters for `n_trials` trials and writes
/// `study.json` and `best_params.json`. The space comes from `space_path` or
/// the shipped default for the target. With `jobs == 1` (or a single-core
/// pool) trials run in order and the study is reproducible from the seed.
pub fn cmd_tune(
    cfg: &PipelineConfig,
    target: &str,
    n_trials: usize,
    space_path: Option<&Path>,
) -> Result<BestParams, PipelineError> {
    let kind = TuneTarget::parse(target)?;
    if n_trials == 0 {
        return Err(PipelineError::Tuning("empty study: n_trials is 0".into()));
    }
    let space = match space_path {
        Some(p) => load_search_space(p)?,
        None => shipped_search_space(target)?,
    };
    if space.target != target {
        return Err(PipelineError::Config(format!(
            "search space is for {:?}, not {target:?}",
            space.target
        )));
    }
    let (t, _) = load_input(cfg, true)?;
    let mut study = Study::new(Direction::Maximize, cfg.seed);
    let jobs = if cfg.jobs == 0 { rayon::current_num_threads() } else { cfg.jobs };

    match &kind {
        TuneTarget::Gan => {
            let minority = t.class_rows(minority_label(&t));
            let base = GanConfig { seed: cfg.seed, ..cfg.gan.clone() };
            let objective = |trial: &mut TrialHandle<'_>| gan_objective(&minority, &base, &space.param, trial);
            run(&mut study, n_trials, jobs, objective);
        }
        TuneTarget::Model(name) => {
            let base = cfg.member(name)?.config;
            let folds = stratified_kfold(&t, cfg.folds, cfg.seed)?;
            let policy = cfg.policy();
            let objective =
                |trial: &mut TrialHandle<'_>| model_objective(&t, &folds, &base, &policy, &space.param, trial);
            run(&mut study, n_trials, jobs, objective);
        }
    }

    let out = cfg.ensure_out_dir()?;
    write_json(&out.join("study.json"), &study)?;
    info!(
        "{} complete, {} pruned, {} failed",
        study.count(TrialState::Complete),
        study.count(TrialState::Pruned),
        study.count(TrialState::Failed)
    );
    let best = best_trial(&study).map_err(|e| {
        let reason = study.trials.iter().find_map(|t| t.fail_reason.clone());
        PipelineError::Tuning(match reason {
            Some(r) => format!("{e}; first failure: {r}"),
            None => e.to_string(),
        })
    })?;
    let params = best
        .params
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::to_value(v).expect("parameter values serialize")))
        .collect();
    let result = BestParams {
        target: target.to_string(),
        direction: study.direction,
        value: best.final_value.expect("complete trials carry a value"),
        trial: best.id,
        params,
    };
    write_json(&out.join("best_params.json"), &result)?;
    Ok(result)
}

fn run<F>(study: &mut Study, n_trials: usize, jobs: usize, objective: F)
where
    F: Fn(&mut TrialHandle<'_>) -> Result<f64, TrialError> + Sync,
{
    if jobs <= 1 {
        run_study(study, n_trials, objective);
    } else {
        run_study_concurrent(study, n_trials, jobs, objective);
    }
}
