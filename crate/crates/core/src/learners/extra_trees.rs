//! Extremely randomized trees: no bootstrap, one random threshold per drawn
//! feature, best Gini decrease among the drawn candidates.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{ForestTree, Tree, TreeNode};
use super::LearnerError;
use crate::data::Table;
use crate::rng;

const TREE_STREAM_TAG: u64 = 0x6574_6373;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `floor(sqrt(d))`, at least 1.
    #[default]
    Sqrt,
    /// `floor(f * d)`, at least 1.
    Fraction(f64),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::Fraction(f) => (f * n_features as f64).floor() as usize,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EtcConfig {
    pub n_estimators: usize,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub seed: u64,
}

impl Default for EtcConfig {
    fn default() -> Self {
        EtcConfig { n_estimators: 950, min_samples_split: 2, max_features: MaxFeatures::Sqrt, seed: 0 }
    }
}

impl EtcConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.n_estimators == 0 {
            return Err(LearnerError::InvalidConfig("n_estimators must be at least 1".into()));
        }
        if let MaxFeatures::Fraction(f) = self.max_features {
            if !(f > 0.0 && f <= 1.0) {
                return Err(LearnerError::InvalidConfig(format!("max_features fraction must lie in (0, 1], got {f}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub config: EtcConfig,
    pub trees: Vec<ForestTree>,
    pub n_features: usize,
}

impl ForestModel {
    /// Unweighted mean of the trees' leaf distributions.
    pub fn proba(&self, row: ndarray::ArrayView1<'_, f64>) -> [f64; 2] {
        let mut acc = [0.0; 2];
        for t in &self.trees {
            let leaf = t.leaf_for(row);
            acc[0] += leaf[0];
            acc[1] += leaf[1];
        }
        let n = self.trees.len() as f64;
        let p1 = (acc[1] / n).clamp(0.0, 1.0);
        [1.0 - p1, p1]
    }
}

pub fn fit_extra_trees(t: &Table, cfg: &EtcConfig) -> Result<ForestModel, LearnerError> {
    cfg.validate()?;
    super::require_both_classes(t.labels())?;
    let draws = cfg.max_features.resolve(t.col_count());
    let seed = rng::derive_seed(cfg.seed, TREE_STREAM_TAG);
    let trees = (0..cfg.n_estimators)
        .into_par_iter()
        .map(|i| grow_tree(t, cfg.min_samples_split, draws, &mut rng::stream(seed, i as u64)))
        .collect();
    Ok(ForestModel { config: cfg.clone(), trees, n_features: t.col_count() })
}

fn gini(n0: usize, n1: usize) -> f64 {
    let n = (n0 + n1) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (n0 as f64 / n, n1 as f64 / n);
    1.0 - p0 * p0 - p1 * p1
}

fn counts(labels: &[u8], rows: &[usize]) -> (usize, usize) {
    let n1 = rows.iter().filter(|&&r| labels[r] == 1).count();
    (rows.len() - n1, n1)
}

fn grow_tree<R: Rng>(t: &Table, min_samples_split: usize, draws: usize, rng: &mut R) -> ForestTree {
    let x = t.features();
    let y = t.labels();
    let d = t.col_count();
    let mut tree: ForestTree = Tree { nodes: Vec::new() };
    let mut stack: Vec<(usize, Vec<usize>)> = Vec::new();
    tree.nodes.push(TreeNode::Leaf { value: [0.0; 2] });
    stack.push((0, (0..t.row_count()).collect()));
    let mut features: Vec<usize> = (0..d).collect();

    while let Some((node, rows)) = stack.pop() {
        let (n0, n1) = counts(y, &rows);
        let n = rows.len() as f64;
        tree.nodes[node] = TreeNode::Leaf { value: [n0 as f64 / n, n1 as f64 / n] };
        if n0 == 0 || n1 == 0 || rows.len() < min_samples_split.max(2) {
            continue;
        }
        let parent = n * gini(n0, n1);
        // Partial Fisher-Yates over features; constant-in-node features do not
        // count towards the draw budget.
        let mut best: Option<(f64, usize, f64)> = None;
        let mut drawn = 0;
        let mut remaining = d;
        while drawn < draws && remaining > 0 {
            let pick = rng.random_range(0..remaining);
            remaining -= 1;
            features.swap(pick, remaining);
            let f = features[remaining];
            let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                (lo.min(x[[r, f]]), hi.max(x[[r, f]]))
            });
            if lo >= hi {
                continue;
            }
            drawn += 1;
            let mut u: f64 = rng.random();
            while u == 0.0 {
                u = rng.random();
            }
            let mut threshold = lo + u * (hi - lo);
            if threshold <= lo {
                threshold = hi;
            }
            let (mut l0, mut l1) = (0, 0);
            for &r in &rows {
                if x[[r, f]] < threshold {
                    if y[r] == 1 {
                        l1 += 1;
                    } else {
                        l0 += 1;
                    }
                }
            }
            let (r0, r1) = (n0 - l0, n1 - l1);
            let decrease = parent - (l0 + l1) as f64 * gini(l0, l1) - (r0 + r1) as f64 * gini(r0, r1);
            if best.is_none_or(|b| decrease > b.0) {
                best = Some((decrease, f, threshold));
            }
        }
        let Some((decrease, feature, threshold)) = best else { continue };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| x[[r, feature]] < threshold);
        let left = tree.nodes.len();
        tree.nodes.push(TreeNode::Leaf { value: [0.0; 2] });
        tree.nodes.push(TreeNode::Leaf { value: [0.0; 2] });
        tree.nodes[node] = TreeNode::Split { feature, threshold, gain: decrease.max(0.0), left, right: left + 1 };
        stack.push((left + 1, right_rows));
        stack.push((left, left_rows));
    }
    tree
}
