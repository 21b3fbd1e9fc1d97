//! Define-by-run hyperparameter search.
//!
//! An objective receives a [`TrialHandle`], asks it for parameter values as
//! it goes ([`TrialHandle::suggest`]) and may report intermediate scores
//! ([`TrialHandle::report`]) that the median pruner uses to stop weak trials
//! early. The first `n_startup` observations of a parameter are drawn
//! uniformly; later ones come from the TPE sampler in [`tpe`].

pub mod pruner;
pub mod space;
pub mod tpe;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
pub use pruner::median_should_prune;
pub use space::{ParamKind, ParamSpec, ParamValue};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("parameter {name:?} re-declared with a different definition")]
    SpecConflict { name: String },
    #[error("invalid parameter {name:?}: {reason}")]
    InvalidSpec { name: String, reason: String },
    #[error("step {step} reported after step {last}")]
    OutOfOrderStep { step: u64, last: u64 },
    #[error("study has no complete trials")]
    NoCompleteTrials,
    #[error("study json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Why an objective did not return a value.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrialError {
    #[error("trial pruned")]
    Pruned,
    #[error("{0}")]
    Failed(String),
}

impl From<StudyError> for TrialError {
    fn from(e: StudyError) -> Self {
        TrialError::Failed(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// Maps an objective value so that larger is always better.
    pub fn score(self, value: f64) -> f64 {
        match self {
            Direction::Maximize => value,
            Direction::Minimize => -value,
        }
    }

    pub fn is_better(self, a: f64, b: f64) -> bool {
        self.score(a) > self.score(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialState {
    Running,
    Complete,
    Pruned,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub id: usize,
    pub params: BTreeMap<String, ParamValue>,
    /// Definition each parameter was suggested under.
    pub specs: BTreeMap<String, ParamKind>,
    pub intermediate: Vec<(u64, f64)>,
    pub state: TrialState,
    pub final_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail_reason: Option<String>,
}

impl Trial {
    fn new(id: usize) -> Self {
        Trial {
            id,
            params: BTreeMap::new(),
            specs: BTreeMap::new(),
            intermediate: Vec::new(),
            state: TrialState::Running,
            final_value: None,
            fail_reason: None,
        }
    }

    pub fn value_at(&self, step: u64) -> Option<f64> {
        self.intermediate.iter().find(|(s, _)| *s == step).map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub n_startup: usize,
    pub gamma_fraction: f64,
    pub n_ei_candidates: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { n_startup: 10, gamma_fraction: 0.25, n_ei_candidates: 24 }
    }
}

impl SamplerConfig {
    /// Never leaves the uniform startup phase.
    pub fn random_search() -> Self {
        SamplerConfig { n_startup: usize::MAX, ..SamplerConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrunerConfig {
    pub enabled: bool,
    pub n_warmup_steps: u64,
    pub n_min_trials: usize,
}

impl Default for PrunerConfig {
    fn default() -> Self {
        PrunerConfig { enabled: true, n_warmup_steps: 5, n_min_trials: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneDecision {
    Continue,
    Prune,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub direction: Direction,
    pub trials: Vec<Trial>,
    pub sampler: SamplerConfig,
    pub pruner: PrunerConfig,
    pub seed: u64,
}

impl Study {
    pub fn new(direction: Direction, seed: u64) -> Self {
        Study {
            direction,
            trials: Vec::new(),
            sampler: SamplerConfig::default(),
            pruner: PrunerConfig::default(),
            seed,
        }
    }

    pub fn with_sampler(mut self, sampler: SamplerConfig) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn with_pruner(mut self, pruner: PrunerConfig) -> Self {
        self.pruner = pruner;
        self
    }

    pub fn to_json(&self) -> Result<String, StudyError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, StudyError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn count(&self, state: TrialState) -> usize {
        self.trials.iter().filter(|t| t.state == state).count()
    }

    fn propose(&self, spec: &ParamSpec, rng: &mut ChaCha8Rng) -> ParamValue {
        if tpe::observation_count(&self.trials, spec) < self.sampler.n_startup {
            spec.sample_uniform(rng)
        } else {
            tpe::tpe_propose(&self.trials, self.direction, spec, &self.sampler, rng)
        }
    }

    fn prune_decision(&self, step: u64, value: f64) -> PruneDecision {
        if self.pruner.enabled && median_should_prune(&self.trials, self.direction, &self.pruner, step, value) {
            PruneDecision::Prune
        } else {
            PruneDecision::Continue
        }
    }
}

enum History<'s> {
    Borrowed(&'s Study),
    Shared(&'s Mutex<Study>),
}

/// The objective's view of one trial.
pub struct TrialHandle<'s> {
    history: History<'s>,
    trial: Trial,
    rng: ChaCha8Rng,
}

impl<'s> TrialHandle<'s> {
    fn new(history: History<'s>, id: usize, seed: u64) -> Self {
        TrialHandle { history, trial: Trial::new(id), rng: rng::stream(seed, id as u64) }
    }

    pub fn id(&self) -> usize {
        self.trial.id
    }

    pub fn params(&self) -> &BTreeMap<String, ParamValue> {
        &self.trial.params
    }

    fn with_study<T>(&mut self, f: impl FnOnce(&Study, &mut ChaCha8Rng) -> T) -> T {
        match self.history {
            History::Borrowed(study) => f(study, &mut self.rng),
            History::Shared(lock) => {
                let study = lock.lock().unwrap_or_else(|e| e.into_inner());
                f(&study, &mut self.rng)
            }
        }
    }

    /// Value for `spec` in this trial; repeated calls with the same name return the first value.
    pub fn suggest(&mut self, spec: &ParamSpec) -> Result<ParamValue, StudyError> {
        spec.validate()?;
        if let Some(kind) = self.trial.specs.get(&spec.name) {
            if *kind != spec.kind {
                return Err(StudyError::SpecConflict { name: spec.name.clone() });
            }
            return Ok(self.trial.params[&spec.name].clone());
        }
        let value = self.with_study(|study, rng| study.propose(spec, rng));
        self.trial.specs.insert(spec.name.clone(), spec.kind.clone());
        self.trial.params.insert(spec.name.clone(), value.clone());
        Ok(value)
    }

    pub fn suggest_float(&mut self, name: &str, low: f64, high: f64) -> Result<f64, StudyError> {
        Ok(self.suggest(&ParamSpec::float(name, low, high))?.as_f64().expect("float spec"))
    }

    pub fn suggest_log_float(&mut self, name: &str, low: f64, high: f64) -> Result<f64, StudyError> {
        Ok(self.suggest(&ParamSpec::log_float(name, low, high))?.as_f64().expect("float spec"))
    }

    pub fn suggest_int(&mut self, name: &str, low: i64, high: i64) -> Result<i64, StudyError> {
        Ok(self.suggest(&ParamSpec::int(name, low, high))?.as_i64().expect("int spec"))
    }

    pub fn suggest_categorical(&mut self, name: &str, choices: &[&str]) -> Result<String, StudyError> {
        Ok(self.suggest(&ParamSpec::categorical(name, choices))?.as_str().expect("categorical spec").to_string())
    }

    /// Records an intermediate value and asks the pruner whether to stop.
    pub fn report(&mut self, step: u64, value: f64) -> Result<PruneDecision, StudyError> {
        if let Some(&(last, _)) = self.trial.intermediate.last() {
            if step <= last {
                return Err(StudyError::OutOfOrderStep { step, last });
            }
        }
        self.trial.intermediate.push((step, value));
        Ok(self.with_study(|study, _| study.prune_decision(step, value)))
    }

    fn finish(mut self, outcome: Result<f64, TrialError>) -> Trial {
        match outcome {
            Ok(v) if v.is_finite() => {
                self.trial.state = TrialState::Complete;
                self.trial.final_value = Some(v);
            }
            Ok(v) => {
                self.trial.state = TrialState::Failed;
                self.trial.fail_reason = Some(format!("objective returned {v}"));
            }
            Err(TrialError::Pruned) if !self.trial.intermediate.is_empty() => {
                self.trial.state = TrialState::Pruned;
            }
            Err(TrialError::Pruned) => {
                self.trial.state = TrialState::Failed;
                self.trial.fail_reason = Some("pruned before reporting any value".into());
            }
            Err(TrialError::Failed(reason)) => {
                self.trial.state = TrialState::Failed;
                self.trial.fail_reason = Some(reason);
            }
        }
        self.trial
    }
}

/// Runs `n_trials` trials one after another, appending each to the study.
pub fn run_study<F>(study: &mut Study, n_trials: usize, mut objective: F) -> &Study
where
    F: FnMut(&mut TrialHandle<'_>) -> Result<f64, TrialError>,
{
    for _ in 0..n_trials {
        let id = study.trials.len();
        let seed = study.seed;
        let mut handle = TrialHandle::new(History::Borrowed(study), id, seed);
        let outcome = objective(&mut handle);
        let trial = handle.finish(outcome);
        study.trials.push(trial);
    }
    study
}

/// Runs trials on up to `n_jobs` threads. Sampler reads and trial appends are
/// serialized through a lock; the trial sequence is only reproducible when
/// `n_jobs == 1`.
pub fn run_study_concurrent<F>(study: &mut Study, n_trials: usize, n_jobs: usize, objective: F)
where
    F: Fn(&mut TrialHandle<'_>) -> Result<f64, TrialError> + Sync,
{
    let shared = Mutex::new(std::mem::replace(study, Study::new(study.direction, study.seed)));
    let remaining = AtomicUsize::new(n_trials);
    std::thread::scope(|scope| {
        for _ in 0..n_jobs.max(1) {
            scope.spawn(|| loop {
                if remaining
                    .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |r| r.checked_sub(1))
                    .is_err()
                {
                    break;
                }
                let (id, seed) = {
                    let mut s = shared.lock().unwrap_or_else(|e| e.into_inner());
                    let id = s.trials.len();
                    s.trials.push(Trial::new(id));
                    (id, s.seed)
                };
                let mut handle = TrialHandle::new(History::Shared(&shared), id, seed);
                let outcome = objective(&mut handle);
                let trial = handle.finish(outcome);
                shared.lock().unwrap_or_else(|e| e.into_inner()).trials[id] = trial;
            });
        }
    });
    *study = shared.into_inner().unwrap_or_else(|e| e.into_inner());
}

/// Complete trial with the best final value; ties go to the lowest id.
pub fn best_trial(study: &Study) -> Result<&Trial, StudyError> {
    let mut best: Option<&Trial> = None;
    for t in study.trials.iter().filter(|t| t.state == TrialState::Complete) {
        let v = t.final_value.expect("complete trials carry a value");
        if best.is_none_or(|b| study.direction.is_better(v, b.final_value.expect("complete"))) {
            best = Some(t);
        }
    }
    best.ok_or(StudyError::NoCompleteTrials)
}
