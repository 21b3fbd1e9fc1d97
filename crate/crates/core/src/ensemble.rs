//! Weighted voting over trained models.
//!
//! Member weights default to each model's cross-validated weighted F1, taken
//! verbatim: voting only compares weighted sums, so scale does not matter.

use std::path::{Path, PathBuf};

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::{LearnerError, TrainedModel};

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("every member score is zero")]
    AllZeroScores,
    #[error("member score {0} is outside [0, 1]")]
    InvalidScore(f64),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("{members} members but {weights} weights")]
    LengthMismatch { members: usize, weights: usize },
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error("manifest json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VotingMode {
    /// Weighted mean of member probabilities.
    #[default]
    Soft,
    /// Weighted count of member labels.
    Hard,
}

/// How member scores become weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// The scores themselves.
    #[default]
    Raw,
    /// Every member weighs 1.
    Equal,
}

/// Weights from per-member weighted-F1 scores.
pub fn derive_weights(scores: &[f64]) -> Result<Vec<f64>, EnsembleError> {
    derive_weights_with(scores, WeightScheme::Raw)
}

pub fn derive_weights_with(scores: &[f64], scheme: WeightScheme) -> Result<Vec<f64>, EnsembleError> {
    if let Some(&s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(EnsembleError::InvalidScore(s));
    }
    if !scores.iter().any(|&s| s > 0.0) {
        return Err(EnsembleError::AllZeroScores);
    }
    Ok(match scheme {
        WeightScheme::Raw => scores.to_vec(),
        WeightScheme::Equal => vec![1.0; scores.len()],
    })
}

fn check_weights(n_members: usize, weights: &[f64]) -> Result<(), EnsembleError> {
    if n_members != weights.len() {
        return Err(EnsembleError::LengthMismatch { members: n_members, weights: weights.len() });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(EnsembleError::InvalidWeights("weights must be finite and non-negative".into()));
    }
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(EnsembleError::InvalidWeights("at least one weight must be positive".into()));
    }
    Ok(())
}

/// Soft vote over precomputed member probabilities (`member_probs[m][row]`).
/// Returns the weighted mean pair and the argmax label; ties go to class 1.
pub fn combine_soft(member_probs: &[Vec<[f64; 2]>], weights: &[f64]) -> Result<Vec<([f64; 2], u8)>, EnsembleError> {
    check_weights(member_probs.len(), weights)?;
    let n_rows = member_probs[0].len();
    let total: f64 = weights.iter().sum();
    let out = (0..n_rows)
        .map(|i| {
            let mut acc = [0.0; 2];
            for (probs, w) in member_probs.iter().zip(weights) {
                acc[0] += w * probs[i][0];
                acc[1] += w * probs[i][1];
            }
            let p = [acc[0] / total, acc[1] / total];
            (p, u8::from(p[1] >= p[0]))
        })
        .collect();
    Ok(out)
}

/// Hard vote over precomputed member labels (`member_labels[m][row]`); ties go to class 1.
pub fn combine_hard(member_labels: &[Vec<u8>], weights: &[f64]) -> Result<Vec<u8>, EnsembleError> {
    check_weights(member_labels.len(), weights)?;
    let n_rows = member_labels[0].len();
    let out = (0..n_rows)
        .map(|i| {
            let mut votes = [0.0; 2];
            for (labels, w) in member_labels.iter().zip(weights) {
                votes[usize::from(labels[i])] += w;
            }
            u8::from(votes[1] >= votes[0])
        })
        .collect();
    Ok(out)
}

pub fn vote_soft(
    members: &[TrainedModel],
    weights: &[f64],
    rows: ArrayView2<'_, f64>,
) -> Result<Vec<([f64; 2], u8)>, EnsembleError> {
    check_weights(members.len(), weights)?;
    let probs = members.iter().map(|m| m.predict_proba(rows)).collect::<Result<Vec<_>, _>>()?;
    combine_soft(&probs, weights)
}

pub fn vote_hard(members: &[TrainedModel], weights: &[f64], rows: ArrayView2<'_, f64>) -> Result<Vec<u8>, EnsembleError> {
    check_weights(members.len(), weights)?;
    let labels = members.iter().map(|m| m.predict(rows)).collect::<Result<Vec<_>, _>>()?;
    combine_hard(&labels, weights)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub members: Vec<TrainedModel>,
    pub weights: Vec<f64>,
    pub mode: VotingMode,
}

/// On-disk description of an ensemble: member model files (relative to the
/// manifest's directory) plus weights and mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub members: Vec<String>,
    pub weights: Vec<f64>,
    pub mode: VotingMode,
}

impl EnsembleModel {
    pub fn new(members: Vec<TrainedModel>, weights: Vec<f64>, mode: VotingMode) -> Result<Self, EnsembleError> {
        check_weights(members.len(), &weights)?;
        Ok(EnsembleModel { members, weights, mode })
    }

    pub fn predict(&self, rows: ArrayView2<'_, f64>) -> Result<Vec<u8>, EnsembleError> {
        match self.mode {
            VotingMode::Soft => Ok(vote_soft(&self.members, &self.weights, rows)?.into_iter().map(|(_, y)| y).collect()),
            VotingMode::Hard => vote_hard(&self.members, &self.weights, rows),
        }
    }

    /// Writes `member_<i>.json` for every member and `manifest` pointing at them.
    pub fn save(&self, manifest: &Path) -> Result<(), EnsembleError> {
        let dir = manifest.parent().unwrap_or(Path::new("."));
        let mut names = Vec::new();
        for (i, m) in self.members.iter().enumerate() {
            let name = format!("member_{i}.json");
            write(&dir.join(&name), &m.to_json()?)?;
            names.push(name);
        }
        let doc = EnsembleManifest { members: names, weights: self.weights.clone(), mode: self.mode };
        write(manifest, &serde_json::to_string_pretty(&doc)?)
    }

    pub fn load(manifest: &Path) -> Result<Self, EnsembleError> {
        let dir = manifest.parent().unwrap_or(Path::new("."));
        let doc: EnsembleManifest = serde_json::from_str(&read(manifest)?)?;
        let members = doc
            .members
            .iter()
            .map(|name| Ok(TrainedModel::from_json(&read(&dir.join(name))?)?))
            .collect::<Result<Vec<_>, EnsembleError>>()?;
        EnsembleModel::new(members, doc.weights, doc.mode)
    }
}

fn write(path: &Path, text: &str) -> Result<(), EnsembleError> {
    std::fs::write(path, text).map_err(|source| EnsembleError::Io { path: path.to_path_buf(), source })
}

fn read(path: &Path) -> Result<String, EnsembleError> {
    std::fs::read_to_string(path).map_err(|source| EnsembleError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{EtcConfig, GbdtConfig, ModelConfig};
    use crate::Table;
    use proptest::prelude::*;

    #[test]
    fn weights_are_the_scores() {
        let f1 = [0.9724, 0.9780, 0.9762, 0.9773, 0.9757];
        assert_eq!(derive_weights(&f1).unwrap(), f1.to_vec());
        assert_eq!(derive_weights(&[0.4]).unwrap(), vec![0.4]);
        assert!(matches!(derive_weights(&[0.0, 0.0]), Err(EnsembleError::AllZeroScores)));
        assert!(matches!(derive_weights(&[1.2]), Err(EnsembleError::InvalidScore(_))));
        assert_eq!(derive_weights_with(&f1, WeightScheme::Equal).unwrap(), vec![1.0; 5]);
    }

    #[test]
    fn soft_vote_examples() {
        let probs = vec![vec![[0.6, 0.4]], vec![[0.2, 0.8]]];
        let out = combine_soft(&probs, &[1.0, 1.0]).unwrap();
        assert!((out[0].0[0] - 0.4).abs() < 1e-12 && (out[0].0[1] - 0.6).abs() < 1e-12);
        assert_eq!(out[0].1, 1);
        // (3 * 0.6 + 0.2) / 4 = 0.5: a tie, resolved to class 1.
        let out = combine_soft(&probs, &[3.0, 1.0]).unwrap();
        assert!((out[0].0[0] - 0.5).abs() < 1e-12);
        assert_eq!(out[0].1, 1);
    }

    #[test]
    fn hard_vote_examples() {
        let votes = vec![vec![1], vec![1], vec![0]];
        assert_eq!(combine_hard(&votes, &[1.0; 3]).unwrap(), vec![1]);
        let votes = vec![vec![0], vec![1], vec![1]];
        assert_eq!(combine_hard(&votes, &[2.0, 1.0, 1.0]).unwrap(), vec![1]);
        assert_eq!(combine_hard(&[vec![0, 1, 1]], &[0.7]).unwrap(), vec![0, 1, 1]);
    }

    #[test]
    fn bad_weights_are_rejected() {
        let probs = vec![vec![[0.5, 0.5]]];
        assert!(matches!(combine_soft(&probs, &[0.0]), Err(EnsembleError::InvalidWeights(_))));
        assert!(matches!(combine_soft(&probs, &[1.0, 1.0]), Err(EnsembleError::LengthMismatch { .. })));
        assert!(matches!(combine_hard(&[vec![1]], &[-1.0]), Err(EnsembleError::InvalidWeights(_))));
    }

    fn probs_strategy() -> impl Strategy<Value = (Vec<Vec<[f64; 2]>>, Vec<f64>)> {
        (1usize..5, 1usize..8).prop_flat_map(|(m, n)| {
            (
                proptest::collection::vec(
                    proptest::collection::vec((0.0f64..=1.0).prop_map(|p| [1.0 - p, p]), n),
                    m,
                ),
                proptest::collection::vec(0.01f64..10.0, m),
            )
        })
    }

    proptest! {
        #[test]
        fn scaling_weights_changes_nothing((probs, weights) in probs_strategy(), c in 0.01f64..100.0) {
            let scaled: Vec<f64> = weights.iter().map(|w| w * c).collect();
            let a = combine_soft(&probs, &weights).unwrap();
            let b = combine_soft(&probs, &scaled).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.0[1] - y.0[1]).abs() < 1e-12);
            }
            let labels: Vec<Vec<u8>> = probs.iter().map(|m| m.iter().map(|p| u8::from(p[1] >= 0.5)).collect()).collect();
            prop_assert_eq!(combine_hard(&labels, &weights).unwrap(), combine_hard(&labels, &scaled).unwrap());
        }

        #[test]
        fn soft_vote_is_a_convex_combination((probs, weights) in probs_strategy()) {
            let out = combine_soft(&probs, &weights).unwrap();
            let equal = combine_soft(&probs, &vec![1.0; probs.len()]).unwrap();
            for (i, (p, _)) in out.iter().enumerate() {
                for c in 0..2 {
                    let lo = probs.iter().map(|m| m[i][c]).fold(f64::INFINITY, f64::min);
                    let hi = probs.iter().map(|m| m[i][c]).fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(p[c] >= lo - 1e-12 && p[c] <= hi + 1e-12);
                }
                let mean = probs.iter().map(|m| m[i][1]).sum::<f64>() / probs.len() as f64;
                prop_assert!((equal[i].0[1] - mean).abs() < 1e-12);
            }
        }
    }

    fn toy() -> Table {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![f64::from(i), f64::from(i % 7)]).collect();
        Table::from_rows(&rows, (0..40).map(|i| u8::from(i >= 20)).collect()).unwrap()
    }

    #[test]
    fn single_member_ensemble_is_that_member() {
        let t = toy();
        let m = ModelConfig::Gbdt(GbdtConfig { n_estimators: 5, ..GbdtConfig::default() }).fit(&t).unwrap();
        let rows = t.features().view();
        let alone = m.predict(rows).unwrap();
        for mode in [VotingMode::Soft, VotingMode::Hard] {
            let e = EnsembleModel::new(vec![m.clone()], vec![0.9], mode).unwrap();
            assert_eq!(e.predict(rows).unwrap(), alone);
        }
    }

    #[test]
    fn manifest_round_trip() {
        let t = toy();
        let members = vec![
            ModelConfig::Gbdt(GbdtConfig { n_estimators: 3, ..GbdtConfig::default() }).fit(&t).unwrap(),
            ModelConfig::Etc(EtcConfig { n_estimators: 3, ..EtcConfig::default() }).fit(&t).unwrap(),
        ];
        let e = EnsembleModel::new(members, vec![0.97, 0.95], VotingMode::Soft).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ensemble.json");
        e.save(&path).unwrap();
        assert_eq!(EnsembleModel::load(&path).unwrap(), e);
        let doc: EnsembleManifest = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(doc.members, vec!["member_0.json", "member_1.json"]);
    }
}
