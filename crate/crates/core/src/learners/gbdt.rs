//! Gradient boosting on the logistic loss with exact greedy split search.
//!
//! One engine covers the second-order (Newton) formulation with L1/L2
//! regularization and the first-order variant that fits each tree to the
//! residual `y - p` and then sets leaf values by a Newton step.

use std::collections::VecDeque;

use ndarray::ArrayView2;
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{midpoint, BoostTree, Tree, TreeNode};
use super::LearnerError;
use crate::data::{stratified_split_indices, Table};
use crate::rng;

const ROUND_STREAM_TAG: u64 = 0x6764_6274;
const VALIDATION_SPLIT_TAG: u64 = 0x7661_6c69;
/// Nodes smaller than this (rows × candidate columns) are searched serially.
const PARALLEL_SEARCH_MIN_WORK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    #[default]
    Second,
    First,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// Expand nodes level by level.
    #[default]
    Depthwise,
    /// Always expand the leaf with the largest gain.
    Leafwise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbdtConfig {
    pub order: Order,
    pub learning_rate: f64,
    pub n_estimators: usize,
    /// `None` grows without a depth limit.
    pub max_depth: Option<usize>,
    /// Cap on leaves per tree.
    pub num_leaves: Option<usize>,
    pub growth: Growth,
    /// Minimum hessian sum in each child of a split.
    pub min_child_weight: f64,
    /// Nodes with fewer rows are not split.
    pub min_samples_split: usize,
    /// Minimum row count in each child of a split.
    pub min_samples_leaf: usize,
    pub subsample: f64,
    pub colsample: f64,
    pub l1_alpha: f64,
    pub l2_lambda: f64,
    pub early_stopping_rounds: Option<usize>,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            order: Order::Second,
            learning_rate: 0.1,
            n_estimators: 100,
            max_depth: Some(6),
            num_leaves: None,
            growth: Growth::Depthwise,
            min_child_weight: 1.0,
            min_samples_split: 2,
            min_samples_leaf: 1,
            subsample: 1.0,
            colsample: 1.0,
            l1_alpha: 0.0,
            l2_lambda: 1.0,
            early_stopping_rounds: None,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

impl GbdtConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |msg: String| Err(LearnerError::InvalidConfig(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.n_estimators == 0 {
            return bad("n_estimators must be at least 1".into());
        }
        for (name, v) in [("subsample", self.subsample), ("colsample", self.colsample)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        for (name, v) in [
            ("l1_alpha", self.l1_alpha),
            ("l2_lambda", self.l2_lambda),
            ("min_child_weight", self.min_child_weight),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        if self.num_leaves.is_some_and(|n| n < 2) {
            return bad("num_leaves must be at least 2".into());
        }
        if self.early_stopping_rounds == Some(0) {
            return bad("early_stopping_rounds must be at least 1".into());
        }
        if self.early_stopping_rounds.is_some()
            && !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0)
        {
            return bad(format!("validation_fraction must lie in (0, 1), got {}", self.validation_fraction));
        }
        Ok(())
    }
}

/// Fitted boosting ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub config: GbdtConfig,
    /// Log-odds of the training positive rate.
    pub base_score: f64,
    pub trees: Vec<BoostTree>,
    /// Number of leading trees used for prediction when early stopping kicked in.
    pub best_iteration: Option<usize>,
    pub n_features: usize,
    /// Training log-loss after each round.
    pub train_loss: Vec<f64>,
    /// Validation log-loss after each round (empty without early stopping).
    pub valid_loss: Vec<f64>,
}

impl GbdtModel {
    pub fn used_trees(&self) -> &[BoostTree] {
        &self.trees[..self.best_iteration.unwrap_or(self.trees.len()).min(self.trees.len())]
    }

    pub fn margin(&self, row: ndarray::ArrayView1<'_, f64>) -> f64 {
        let sum: f64 = self.used_trees().iter().map(|t| *t.leaf_for(row)).sum();
        self.base_score + self.config.learning_rate * sum
    }
}

/// `sign(g) * max(|g| - alpha, 0)`.
pub fn soft_threshold(g: f64, alpha: f64) -> f64 {
    g.signum() * (g.abs() - alpha).max(0.0)
}

/// Regularized leaf weight `-T(G) / (H + lambda)`; zero when the denominator vanishes.
pub fn leaf_value(g: f64, h: f64, cfg: &GbdtConfig) -> f64 {
    let d = h + cfg.l2_lambda;
    if d <= 1e-150 {
        0.0
    } else {
        -soft_threshold(g, cfg.l1_alpha) / d
    }
}

fn node_score(g: f64, h: f64, cfg: &GbdtConfig) -> f64 {
    let d = h + cfg.l2_lambda;
    if d <= 1e-150 {
        0.0
    } else {
        soft_threshold(g, cfg.l1_alpha).powi(2) / d
    }
}

/// Gain of splitting a node with sums `(g, h)` into `(gl, hl)` and the rest.
pub fn split_gain(g: f64, h: f64, gl: f64, hl: f64, cfg: &GbdtConfig) -> f64 {
    0.5 * (node_score(gl, hl, cfg) + node_score(g - gl, h - hl, cfg) - node_score(g, h, cfg))
}

/// Gains below this, relative to the parent's score, count as zero.
fn gain_tolerance(g: f64, h: f64, cfg: &GbdtConfig) -> f64 {
    1e-12 * (1.0 + node_score(g, h, cfg))
}

/// Grows one tree on all rows and columns, using `hessians` both for the
/// split search and for the leaf values.
pub fn fit_boosting_tree(
    gradients: &[f64],
    hessians: &[f64],
    features: ArrayView2<'_, f64>,
    cfg: &GbdtConfig,
) -> BoostTree {
    let rows: Vec<usize> = (0..features.nrows()).collect();
    let cols: Vec<usize> = (0..features.ncols()).collect();
    let sorted = presort(features, &rows);
    let stats = Stats { g: gradients, h_split: hessians, h_leaf: hessians };
    grow(features, &stats, &rows, &cols, &sorted, cfg)
}

/// Per-row gradient statistics. The split search and the leaf values may use
/// different hessians (first-order boosting searches with unit hessians).
struct Stats<'a> {
    g: &'a [f64],
    h_split: &'a [f64],
    h_leaf: &'a [f64],
}

/// For every column, `rows` ordered by value (ties by row index).
fn presort(x: ArrayView2<'_, f64>, rows: &[usize]) -> Vec<Vec<usize>> {
    (0..x.ncols())
        .into_par_iter()
        .map(|j| {
            let mut r = rows.to_vec();
            r.sort_by(|&a, &b| x[[a, j]].total_cmp(&x[[b, j]]).then(a.cmp(&b)));
            r
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    /// Position of the column within the tree's column subset.
    slot: usize,
    feature: usize,
    threshold: f64,
    gain: f64,
    /// Rows left of this position in the slot's sorted list go left.
    n_left: usize,
}

struct Pending {
    node: usize,
    depth: usize,
    /// Node rows sorted by each candidate column.
    sorted: Vec<Vec<usize>>,
    best: Option<Candidate>,
}

fn grow(
    x: ArrayView2<'_, f64>,
    stats: &Stats<'_>,
    rows: &[usize],
    cols: &[usize],
    presorted: &[Vec<usize>],
    cfg: &GbdtConfig,
) -> BoostTree {
    let n_total = x.nrows();
    let mut in_tree = vec![false; n_total];
    for &r in rows {
        in_tree[r] = true;
    }
    let sorted: Vec<Vec<usize>> = cols
        .iter()
        .map(|&j| presorted[j].iter().copied().filter(|&r| in_tree[r]).collect())
        .collect();

    let mut tree = Tree { nodes: Vec::new() };
    let root = make_pending(x, stats, cols, sorted, 0, &mut tree, cfg);
    let mut frontier = VecDeque::from([root]);
    let mut leaves = 1usize;
    let mut goes_left = vec![false; n_total];

    while let Some(p) = next_pending(&mut frontier, cfg.growth) {
        let Some(c) = p.best else { continue };
        if cfg.num_leaves.is_some_and(|cap| leaves >= cap) {
            break;
        }
        let rows_in_order = &p.sorted[c.slot];
        for (i, &r) in rows_in_order.iter().enumerate() {
            goes_left[r] = i < c.n_left;
        }
        let (left_sorted, right_sorted): (Vec<Vec<usize>>, Vec<Vec<usize>>) = p
            .sorted
            .into_iter()
            .map(|list| list.into_iter().partition(|&r| goes_left[r]))
            .unzip();
        let left = make_pending(x, stats, cols, left_sorted, p.depth + 1, &mut tree, cfg);
        let right = make_pending(x, stats, cols, right_sorted, p.depth + 1, &mut tree, cfg);
        tree.nodes[p.node] = TreeNode::Split {
            feature: c.feature,
            threshold: c.threshold,
            gain: c.gain,
            left: left.node,
            right: right.node,
        };
        leaves += 1;
        frontier.push_back(left);
        frontier.push_back(right);
    }
    tree
}

fn next_pending(frontier: &mut VecDeque<Pending>, growth: Growth) -> Option<Pending> {
    match growth {
        Growth::Depthwise => frontier.pop_front(),
        Growth::Leafwise => {
            let best = frontier
                .iter()
                .enumerate()
                .filter_map(|(i, p)| p.best.map(|c| (i, c.gain, p.node)))
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)))?;
            frontier.remove(best.0)
        }
    }
}

/// Adds a leaf node for these rows and searches its best split.
fn make_pending(
    x: ArrayView2<'_, f64>,
    stats: &Stats<'_>,
    cols: &[usize],
    sorted: Vec<Vec<usize>>,
    depth: usize,
    tree: &mut BoostTree,
    cfg: &GbdtConfig,
) -> Pending {
    // Every column list holds the same rows; sum in the first one's order.
    let empty = Vec::new();
    let rows = sorted.first().unwrap_or(&empty);
    let g: f64 = rows.iter().map(|&r| stats.g[r]).sum();
    let h_leaf: f64 = rows.iter().map(|&r| stats.h_leaf[r]).sum();
    let node = tree.nodes.len();
    tree.nodes.push(TreeNode::Leaf { value: leaf_value(g, h_leaf, cfg) });

    let splittable = rows.len() >= cfg.min_samples_split.max(2)
        && cfg.max_depth.is_none_or(|d| depth < d)
        && !cols.is_empty();
    let best = if splittable { best_split(x, stats, cols, &sorted, cfg) } else { None };
    Pending { node, depth, sorted, best }
}

fn best_split(
    x: ArrayView2<'_, f64>,
    stats: &Stats<'_>,
    cols: &[usize],
    sorted: &[Vec<usize>],
    cfg: &GbdtConfig,
) -> Option<Candidate> {
    let g_total: f64 = sorted[0].iter().map(|&r| stats.g[r]).sum();
    let h_total: f64 = sorted[0].iter().map(|&r| stats.h_split[r]).sum();
    let tol = gain_tolerance(g_total, h_total, cfg);
    let search =
        |slot: usize| best_split_in_column(x, stats, slot, cols[slot], &sorted[slot], g_total, h_total, tol, cfg);
    let per_column: Vec<Option<Candidate>> = if sorted[0].len() * cols.len() >= PARALLEL_SEARCH_MIN_WORK {
        (0..cols.len()).into_par_iter().map(search).collect()
    } else {
        (0..cols.len()).map(search).collect()
    };
    // Columns are in ascending feature order, so a strict comparison keeps
    // the lowest feature index among equal gains.
    let mut best: Option<Candidate> = None;
    for c in per_column.into_iter().flatten() {
        if best.is_none_or(|b| c.gain > b.gain) {
            best = Some(c);
        }
    }
    // A zero-gain split is still taken while the node's gradients differ:
    // symmetric patterns such as XOR only pay off one level further down.
    let first = sorted[0].first().map(|&r| stats.g[r]);
    let gradients_vary = sorted[0].iter().any(|&r| Some(stats.g[r]) != first);
    best.filter(|c| c.gain > 0.0 || gradients_vary)
}

#[allow(clippy::too_many_arguments)]
fn best_split_in_column(
    x: ArrayView2<'_, f64>,
    stats: &Stats<'_>,
    slot: usize,
    feature: usize,
    rows: &[usize],
    g_total: f64,
    h_total: f64,
    tol: f64,
    cfg: &GbdtConfig,
) -> Option<Candidate> {
    let n = rows.len();
    let min_leaf = cfg.min_samples_leaf.max(1);
    let (mut gl, mut hl) = (0.0, 0.0);
    let mut best: Option<Candidate> = None;
    for i in 0..n.saturating_sub(1) {
        let r = rows[i];
        gl += stats.g[r];
        hl += stats.h_split[r];
        let (a, b) = (x[[r, feature]], x[[rows[i + 1], feature]]);
        let n_left = i + 1;
        if a >= b || n_left < min_leaf || n - n_left < min_leaf {
            continue;
        }
        let hr = h_total - hl;
        if hl < cfg.min_child_weight || hr < cfg.min_child_weight {
            continue;
        }
        let gain = split_gain(g_total, h_total, gl, hl, cfg);
        let gain = if gain > tol { gain } else { 0.0 };
        if best.is_none_or(|c| gain > c.gain) {
            best = Some(Candidate { slot, feature, threshold: midpoint(a, b), gain, n_left });
        }
    }
    best
}

fn sigmoid(m: f64) -> f64 {
    1.0 / (1.0 + (-m).exp())
}

/// Mean logistic loss of margins against labels.
pub fn log_loss(margins: &[f64], labels: &[u8]) -> f64 {
    let total: f64 = margins
        .iter()
        .zip(labels)
        .map(|(&m, &y)| {
            let softplus = m.max(0.0) + (-m.abs()).exp().ln_1p();
            softplus - f64::from(y) * m
        })
        .sum();
    total / margins.len().max(1) as f64
}

/// Trains a boosted ensemble on the logistic loss.
pub fn fit_gbdt(t: &Table, cfg: &GbdtConfig) -> Result<GbdtModel, LearnerError> {
    cfg.validate()?;
    super::require_both_classes(t.labels())?;
    let (train, valid) = match cfg.early_stopping_rounds {
        Some(_) => {
            stratified_split_indices(t, cfg.validation_fraction, rng::derive_seed(cfg.seed, VALIDATION_SPLIT_TAG))?
        }
        None => ((0..t.row_count()).collect(), Vec::new()),
    };
    let x = t.features();
    let y = t.labels();
    let train_labels: Vec<u8> = train.iter().map(|&r| y[r]).collect();
    let valid_labels: Vec<u8> = valid.iter().map(|&r| y[r]).collect();
    super::require_both_classes(&train_labels)?;

    let positives = train_labels.iter().filter(|&&v| v == 1).count() as f64;
    let rate = positives / train.len() as f64;
    let base_score = (rate / (1.0 - rate)).ln();

    let presorted = presort(x.view(), &train);
    let mut margin = vec![base_score; t.row_count()];
    let mut g = vec![0.0; t.row_count()];
    let mut h = vec![0.0; t.row_count()];
    let ones = vec![1.0; t.row_count()];
    let n_cols = x.ncols();
    let n_rows_round = ((cfg.subsample * train.len() as f64).round() as usize).clamp(1, train.len());
    let n_cols_round = ((cfg.colsample * n_cols as f64).round() as usize).clamp(1, n_cols.max(1));
    let round_seed = rng::derive_seed(cfg.seed, ROUND_STREAM_TAG);

    let mut model = GbdtModel {
        config: cfg.clone(),
        base_score,
        trees: Vec::with_capacity(cfg.n_estimators),
        best_iteration: None,
        n_features: n_cols,
        train_loss: Vec::new(),
        valid_loss: Vec::new(),
    };
    let mut best: Option<(f64, usize)> = None;

    for round in 0..cfg.n_estimators {
        let mut r = rng::stream(round_seed, round as u64);
        let rows: Vec<usize> = if n_rows_round < train.len() {
            let mut pick = index::sample(&mut r, train.len(), n_rows_round).into_vec();
            pick.sort_unstable();
            pick.into_iter().map(|i| train[i]).collect()
        } else {
            train.clone()
        };
        let cols: Vec<usize> = if n_cols_round < n_cols {
            let mut pick = index::sample(&mut r, n_cols, n_cols_round).into_vec();
            pick.sort_unstable();
            pick
        } else {
            (0..n_cols).collect()
        };

        for &i in &train {
            let p = sigmoid(margin[i]);
            g[i] = p - f64::from(y[i]);
            h[i] = p * (1.0 - p);
        }
        let stats = match cfg.order {
            Order::Second => Stats { g: &g, h_split: &h, h_leaf: &h },
            Order::First => Stats { g: &g, h_split: &ones, h_leaf: &h },
        };
        let tree = grow(x.view(), &stats, &rows, &cols, &presorted, cfg);

        for &i in train.iter().chain(&valid) {
            margin[i] += cfg.learning_rate * tree.leaf_for(x.row(i));
        }
        model.trees.push(tree);
        let pick = |idx: &[usize]| idx.iter().map(|&i| margin[i]).collect::<Vec<f64>>();
        model.train_loss.push(log_loss(&pick(&train), &train_labels));

        if let Some(patience) = cfg.early_stopping_rounds {
            let loss = log_loss(&pick(&valid), &valid_labels);
            model.valid_loss.push(loss);
            if best.is_none_or(|(b, _)| loss < b) {
                best = Some((loss, round + 1));
            }
            let (_, best_round) = best.expect("set above");
            if round + 1 - best_round >= patience {
                break;
            }
        }
    }
    model.best_iteration = best.map(|(_, n)| n);
    Ok(model)
}
