//! Binary decision trees stored as flat node arrays (root at index 0).

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode<L> {
    /// Rows with `x[feature] < threshold` go to `left`, all others to `right`.
    /// `gain` is the loss reduction credited to this split.
    Split { feature: usize, threshold: f64, gain: f64, left: usize, right: usize },
    Leaf { value: L },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<L> {
    pub nodes: Vec<TreeNode<L>>,
}

/// Boosting tree: leaves hold an additive margin.
pub type BoostTree = Tree<f64>;
/// Forest tree: leaves hold `[P(class 0), P(class 1)]`.
pub type ForestTree = Tree<[f64; 2]>;

impl<L> Tree<L> {
    pub fn single_leaf(value: L) -> Self {
        Tree { nodes: vec![TreeNode::Leaf { value }] }
    }

    pub fn leaf_for(&self, row: ArrayView1<'_, f64>) -> &L {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    i = if row[*feature] < *threshold { *left } else { *right };
                }
                TreeNode::Leaf { value } => return value,
            }
        }
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Split { .. })).count()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.len() - self.split_count()
    }

    /// Number of splits on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut deepest = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, d)) = stack.pop() {
            match &self.nodes[i] {
                TreeNode::Split { left, right, .. } => {
                    stack.push((*left, d + 1));
                    stack.push((*right, d + 1));
                }
                TreeNode::Leaf { .. } => deepest = deepest.max(d),
            }
        }
        deepest
    }

    /// Adds every split's gain to `totals[feature]`.
    pub fn add_gains(&self, totals: &mut [f64]) {
        for n in &self.nodes {
            if let TreeNode::Split { feature, gain, .. } = n {
                totals[*feature] += gain;
            }
        }
    }

    /// Checks child indices point forward and in bounds, so traversal terminates.
    pub fn is_well_formed(&self, n_features: usize) -> bool {
        !self.nodes.is_empty()
            && self.nodes.iter().enumerate().all(|(i, n)| match n {
                TreeNode::Split { feature, left, right, threshold, .. } => {
                    *feature < n_features
                        && !threshold.is_nan()
                        && *left > i
                        && *right > i
                        && *left < self.nodes.len()
                        && *right < self.nodes.len()
                }
                TreeNode::Leaf { .. } => true,
            })
    }
}

/// Threshold between two consecutive distinct sorted values `a < b`, chosen so
/// that `a` goes left and `b` goes right even when the midpoint rounds.
pub fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m > a && m <= b {
        m
    } else {
        b
    }
}
