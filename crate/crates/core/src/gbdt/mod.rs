//! Second-order regression trees and a plain gradient boosting driver.
//!
//! Trees are grown greedily from first- and second-order gradients
//! `(g_i, h_i)`. A split's gain is
//!
//! ```text
//! gain = 1/2 [ GL²/(HL+λ) + GR²/(HR+λ) − (GL+GR)²/(HL+HR+λ) ] − γ
//! ```
//!
//! and a leaf's output is `−G/(H+λ)`.

mod binning;
mod booster;
mod grow;
mod tree;

pub use binning::BinnedMatrix;
pub use booster::{fit_gbdt, GbdtModel, GbdtParams, Objective};
pub use grow::{fit_tree, fit_tree_binned, FittedTree};
pub use tree::{Node, RegressionTree};

use serde::{Deserialize, Serialize};

use crate::error::{CbdtError, Result};

/// Per-sample first and second derivatives of the loss.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradHess {
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

impl GradHess {
    pub fn new(g: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        let gh = GradHess { g, h };
        gh.validate()?;
        Ok(gh)
    }

    pub fn zeros(n: usize) -> Self {
        GradHess {
            g: vec![0.0; n],
            h: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.g.len() != self.h.len() {
            return Err(CbdtError::validation(format!(
                "gradient length {} differs from hessian length {}",
                self.g.len(),
                self.h.len()
            )));
        }
        if let Some(i) = self.h.iter().position(|h| !(*h >= 0.0)) {
            return Err(CbdtError::numerical(format!("hessian at row {i} is {} (must be >= 0)", self.h[i])));
        }
        if let Some(i) = self.g.iter().position(|g| !g.is_finite()) {
            return Err(CbdtError::numerical(format!("gradient at row {i} is not finite")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Every midpoint between consecutive distinct values is a candidate.
    #[default]
    Exact,
    /// Values are grouped into at most `max_bins` quantile bins.
    Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// L2 penalty in the gain and leaf-weight denominators.
    pub split_reg_lambda: f64,
    /// Per-split penalty subtracted from the gain.
    pub leaf_penalty_gamma: f64,
    pub max_bins: usize,
    pub mode: SplitMode,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 3,
            min_samples_leaf: 5,
            split_reg_lambda: 1.0,
            leaf_penalty_gamma: 0.0,
            max_bins: 255,
            mode: SplitMode::Exact,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(CbdtError::validation("tree.max_depth must be at least 1"));
        }
        if self.min_samples_leaf < 1 {
            return Err(CbdtError::validation("tree.min_samples_leaf must be at least 1"));
        }
        if !(self.split_reg_lambda >= 0.0 && self.split_reg_lambda.is_finite()) {
            return Err(CbdtError::validation("tree.split_reg_lambda must be finite and >= 0"));
        }
        if !(self.leaf_penalty_gamma >= 0.0 && self.leaf_penalty_gamma.is_finite()) {
            return Err(CbdtError::validation("tree.leaf_penalty_gamma must be finite and >= 0"));
        }
        if self.max_bins < 2 {
            return Err(CbdtError::validation("tree.max_bins must be at least 2"));
        }
        Ok(())
    }
}

/// Gain of splitting a node into (GL, HL) and (GR, HR).
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> Result<f64> {
    let (dl, dr, dp) = (hl + lambda, hr + lambda, hl + hr + lambda);
    if !(dl > 0.0 && dr > 0.0 && dp > 0.0) {
        return Err(CbdtError::numerical(format!(
            "split gain denominators must be positive (HL+λ={dl}, HR+λ={dr}, H+λ={dp})"
        )));
    }
    Ok(unchecked_gain(gl, hl, gr, hr, lambda, gamma))
}

#[inline]
pub(crate) fn unchecked_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let g = gl + gr;
    0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (hl + hr + lambda)) - gamma
}

/// Optimal leaf output `−G/(H+λ)`.
pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> Result<f64> {
    let denom = h + lambda;
    if !(denom > 0.0) {
        return Err(CbdtError::numerical(format!("leaf weight denominator H+λ = {denom} is not positive")));
    }
    Ok(-g / denom)
}
