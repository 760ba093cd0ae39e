use serde::{Deserialize, Serialize};

use crate::error::{CbdtError, Result};
use crate::matrix::Matrix;

/// A tree node. Children are referenced by index into [`RegressionTree::nodes`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
        count: usize,
    },
    Leaf {
        weight: f64,
        count: usize,
    },
}

/// Binary regression tree stored as a flat node list, root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub n_features: usize,
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn constant(n_features: usize, weight: f64) -> Self {
        RegressionTree {
            n_features,
            nodes: vec![Node::Leaf { weight, count: 0 }],
        }
    }

    /// Index of the leaf a row is routed to.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { .. } => return at,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.nodes[self.leaf_index(row)] {
            Node::Leaf { weight, .. } => *weight,
            Node::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok((0..x.rows()).map(|i| self.predict_row(x.row(i))).collect())
    }

    pub(crate) fn check_dim(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.n_features {
            return Err(CbdtError::validation(format!(
                "tree expects {} features, got {}",
                self.n_features,
                x.cols()
            )));
        }
        Ok(())
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Every root-to-leaf path as `(leaf index, [(feature, threshold, went_left)])`.
    pub fn paths(&self) -> Vec<(usize, Vec<(usize, f64, bool)>)> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, Vec::new())];
        while let Some((at, path)) = stack.pop() {
            match &self.nodes[at] {
                Node::Leaf { .. } => out.push((at, path)),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    let mut r = path.clone();
                    r.push((*feature, *threshold, false));
                    stack.push((*right, r));
                    let mut l = path;
                    l.push((*feature, *threshold, true));
                    stack.push((*left, l));
                }
            }
        }
        out
    }

    /// Same split features, thresholds and topology (leaf weights ignored).
    pub fn same_structure(&self, other: &RegressionTree) -> bool {
        self.n_features == other.n_features
            && self.nodes.len() == other.nodes.len()
            && self.nodes.iter().zip(&other.nodes).all(|(a, b)| match (a, b) {
                (Node::Leaf { .. }, Node::Leaf { .. }) => true,
                (
                    Node::Split {
                        feature: f1,
                        threshold: t1,
                        left: l1,
                        right: r1,
                        ..
                    },
                    Node::Split {
                        feature: f2,
                        threshold: t2,
                        left: l2,
                        right: r2,
                        ..
                    },
                ) => f1 == f2 && t1 == t2 && l1 == l2 && r1 == r2,
                _ => false,
            })
    }
}
