use crate::error::{CbdtError, Result};
use crate::gbdt::binning::{BinnedMatrix, FeatureBins};
use crate::gbdt::tree::{Node, RegressionTree};
use crate::gbdt::{leaf_weight, unchecked_gain, GradHess, TreeParams};
use crate::matrix::Matrix;

/// A grown tree plus the leaf each training row ended up in.
#[derive(Debug, Clone)]
pub struct FittedTree {
    pub tree: RegressionTree,
    pub leaf_of_row: Vec<usize>,
}

impl FittedTree {
    /// Training-row predictions, read from the leaf assignment.
    pub fn train_predictions(&self) -> Vec<f64> {
        self.leaf_of_row
            .iter()
            .map(|&l| match self.tree.nodes[l] {
                Node::Leaf { weight, .. } => weight,
                Node::Split { .. } => unreachable!("rows are assigned to leaves"),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    left_bin: u32,
    threshold: f64,
    gain: f64,
}

/// Fit one tree on raw features.
pub fn fit_tree(x: &Matrix, gh: &GradHess, params: &TreeParams) -> Result<RegressionTree> {
    params.validate()?;
    let binned = BinnedMatrix::new(x, params);
    Ok(fit_tree_binned(&binned, gh, params)?.tree)
}

/// Fit one tree on pre-binned features.
///
/// Greedy depth-first growth. A node becomes a leaf at `max_depth`, when it
/// has fewer than `2 * min_samples_leaf` rows, or when no admissible split
/// has positive gain. Ties in gain go to the lowest feature index, then the
/// lowest threshold.
pub fn fit_tree_binned(data: &BinnedMatrix, gh: &GradHess, params: &TreeParams) -> Result<FittedTree> {
    params.validate()?;
    gh.validate()?;
    let n = data.n_rows();
    if gh.len() != n {
        return Err(CbdtError::validation(format!(
            "{} gradients for {n} rows",
            gh.len()
        )));
    }
    if n < 2 * params.min_samples_leaf {
        return Err(CbdtError::validation(format!(
            "{n} rows cannot satisfy min_samples_leaf = {} on both sides",
            params.min_samples_leaf
        )));
    }
    let mut grower = Grower {
        data,
        gh,
        params,
        nodes: Vec::new(),
        leaf_of_row: vec![usize::MAX; n],
    };
    let rows: Vec<u32> = (0..n as u32).collect();
    grower.grow(rows, 0)?;
    Ok(FittedTree {
        tree: RegressionTree {
            n_features: data.n_features(),
            nodes: grower.nodes,
        },
        leaf_of_row: grower.leaf_of_row,
    })
}

struct Grower<'a> {
    data: &'a BinnedMatrix,
    gh: &'a GradHess,
    params: &'a TreeParams,
    nodes: Vec<Node>,
    leaf_of_row: Vec<usize>,
}

impl Grower<'_> {
    fn grow(&mut self, rows: Vec<u32>, depth: usize) -> Result<usize> {
        let (mut g, mut h) = (0.0, 0.0);
        for &r in &rows {
            g += self.gh.g[r as usize];
            h += self.gh.h[r as usize];
        }
        let lambda = self.params.split_reg_lambda;
        let best = if depth < self.params.max_depth && rows.len() >= 2 * self.params.min_samples_leaf {
            self.best_split(&rows, g, h)
        } else {
            None
        };
        let at = self.nodes.len();
        match best {
            Some(c) if c.gain > 0.0 => {
                self.nodes.push(Node::Leaf { weight: 0.0, count: 0 });
                let bins = &self.data.features[c.feature].bin_of_row;
                let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
                    rows.iter().partition(|&&r| bins[r as usize] <= c.left_bin);
                let count = rows.len();
                drop(rows);
                let left = self.grow(left_rows, depth + 1)?;
                let right = self.grow(right_rows, depth + 1)?;
                self.nodes[at] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right,
                    gain: c.gain,
                    count,
                };
            }
            _ => {
                let weight = leaf_weight(g, h, lambda)?;
                for &r in &rows {
                    self.leaf_of_row[r as usize] = at;
                }
                self.nodes.push(Node::Leaf {
                    weight,
                    count: rows.len(),
                });
            }
        }
        Ok(at)
    }

    fn best_split(&self, rows: &[u32], g: f64, h: f64) -> Option<Candidate> {
        let n_features = self.data.n_features();
        let per_feature: Vec<Option<Candidate>> = {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                if rows.len() * n_features >= 50_000 {
                    (0..n_features)
                        .into_par_iter()
                        .map(|f| self.best_for_feature(f, rows, g, h))
                        .collect()
                } else {
                    (0..n_features).map(|f| self.best_for_feature(f, rows, g, h)).collect()
                }
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..n_features).map(|f| self.best_for_feature(f, rows, g, h)).collect()
            }
        };
        // fixed reduction order keeps the result independent of worker count
        let mut best: Option<Candidate> = None;
        for c in per_feature.into_iter().flatten() {
            if best.is_none_or(|b| c.gain > b.gain) {
                best = Some(c);
            }
        }
        best
    }

    fn best_for_feature(&self, feature: usize, rows: &[u32], g: f64, h: f64) -> Option<Candidate> {
        let fb: &FeatureBins = &self.data.features[feature];
        let n_bins = fb.n_bins();
        if n_bins < 2 {
            return None;
        }
        let mut hg = vec![0.0; n_bins];
        let mut hh = vec![0.0; n_bins];
        let mut hc = vec![0u32; n_bins];
        for &r in rows {
            let b = fb.bin_of_row[r as usize] as usize;
            hg[b] += self.gh.g[r as usize];
            hh[b] += self.gh.h[r as usize];
            hc[b] += 1;
        }
        let total = rows.len() as u32;
        let min_leaf = self.params.min_samples_leaf as u32;
        let lambda = self.params.split_reg_lambda;
        let gamma = self.params.leaf_penalty_gamma;
        let (mut gl, mut hl, mut cl) = (0.0, 0.0, 0u32);
        let mut last_left: Option<usize> = None;
        let mut best: Option<Candidate> = None;
        for b in 0..n_bins {
            if hc[b] == 0 {
                continue;
            }
            if let Some(lb) = last_left {
                let cr = total - cl;
                if cl >= min_leaf && cr >= min_leaf {
                    let (gr, hr) = (g - gl, h - hl);
                    if hl + lambda > 0.0 && hr + lambda > 0.0 {
                        let gain = unchecked_gain(gl, hl, gr, hr, lambda, gamma);
                        if best.is_none_or(|c| gain > c.gain) {
                            best = Some(Candidate {
                                feature,
                                left_bin: lb as u32,
                                threshold: fb.threshold_between(lb, b),
                                gain,
                            });
                        }
                    }
                }
                if cr < min_leaf {
                    break;
                }
            }
            gl += hg[b];
            hl += hh[b];
            cl += hc[b];
            last_left = Some(b);
        }
        best
    }
}
