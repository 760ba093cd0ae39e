//! Axis-aligned effect rules read off a shallow surrogate tree.
//!
//! A depth-limited regression tree is fitted to a model's effect estimates.
//! Each leaf becomes one rule: the conjunction of the split conditions on
//! its path, the mean estimate over the rows it covers, and a bootstrap
//! interval for that mean. Leaves are forced to hold at least
//! `min_support` of the rows, so the rules partition the data.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::CausalDataset;
use crate::error::{CbdtError, Result};
use crate::estimator::CateEstimator;
use crate::evaluation::bootstrap_mean;
use crate::gbdt::{fit_tree, GradHess, Node, RegressionTree, TreeParams};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleExtractionSpec {
    pub surrogate_depth: usize,
    /// Smallest fraction of rows a rule may cover.
    pub min_support: f64,
    pub bootstrap_draws: usize,
    pub ci_level: f64,
    pub seed: u64,
}

impl Default for RuleExtractionSpec {
    fn default() -> Self {
        RuleExtractionSpec {
            surrogate_depth: 3,
            min_support: 0.05,
            bootstrap_draws: 500,
            ci_level: 0.95,
            seed: 0,
        }
    }
}

impl RuleExtractionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.surrogate_depth == 0 {
            return Err(CbdtError::validation("surrogate_depth must be at least 1"));
        }
        if !(self.min_support > 0.0 && self.min_support < 1.0) {
            return Err(CbdtError::validation(format!(
                "min_support must lie in (0, 1), got {}",
                self.min_support
            )));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(CbdtError::validation("ci_level must lie in (0, 1)"));
        }
        if self.bootstrap_draws == 0 {
            return Err(CbdtError::validation("bootstrap_draws must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: usize,
    pub name: String,
    pub op: Op,
    pub threshold: f64,
}

impl Condition {
    pub fn holds(&self, row: &[f64]) -> bool {
        match self.op {
            Op::Le => row[self.feature] <= self.threshold,
            Op::Gt => row[self.feature] > self.threshold,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.op {
            Op::Le => "≤",
            Op::Gt => ">",
        };
        write!(f, "{} {op} {:.2}", self.name, self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalRule {
    pub conditions: Vec<Condition>,
    pub effect_estimate: f64,
    pub ci: (f64, f64),
    pub support_count: usize,
    pub support_fraction: f64,
}

impl CausalRule {
    pub fn covers(&self, row: &[f64]) -> bool {
        self.conditions.iter().all(|c| c.holds(row))
    }
}

impl fmt::Display for CausalRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lhs = if self.conditions.is_empty() {
            "TRUE".to_string()
        } else {
            self.conditions.iter().map(ToString::to_string).collect::<Vec<_>>().join(" AND ")
        };
        write!(
            f,
            "IF {lhs} THEN τ̂ = {:.2} [{:.2}, {:.2}], support {:.1}%",
            self.effect_estimate,
            self.ci.0,
            self.ci.1,
            100.0 * self.support_fraction
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<CausalRule>,
    pub surrogate: RegressionTree,
    pub n_rows: usize,
    pub spec: RuleExtractionSpec,
    pub diagnostics: Vec<String>,
}

impl RuleSet {
    /// Index of the rule covering `row`, if any.
    pub fn rule_for(&self, row: &[f64]) -> Option<usize> {
        self.rules.iter().position(|r| r.covers(row))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.rules {
            s.push_str(&r.to_string());
            s.push('\n');
        }
        for d in &self.diagnostics {
            s.push_str("# ");
            s.push_str(d);
            s.push('\n');
        }
        s
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rule", "conditions", "effect", "ci_lo", "ci_hi", "support_count", "support_fraction"])?;
        for (i, r) in self.rules.iter().enumerate() {
            let conds = r.conditions.iter().map(ToString::to_string).collect::<Vec<_>>().join(" AND ");
            w.write_record([
                (i + 1).to_string(),
                conds,
                r.effect_estimate.to_string(),
                r.ci.0.to_string(),
                r.ci.1.to_string(),
                r.support_count.to_string(),
                r.support_fraction.to_string(),
            ])?;
        }
        w.flush().map_err(|e| CbdtError::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Drop conditions implied by a tighter one on the same feature and side.
fn simplify(path: &[(usize, f64, bool)], names: &[String]) -> Vec<Condition> {
    let mut out: Vec<Condition> = Vec::new();
    for &(feature, threshold, went_left) in path {
        let op = if went_left { Op::Le } else { Op::Gt };
        match out.iter_mut().find(|c| c.feature == feature && c.op == op) {
            Some(c) => {
                c.threshold = match op {
                    Op::Le => c.threshold.min(threshold),
                    Op::Gt => c.threshold.max(threshold),
                }
            }
            None => out.push(Condition {
                feature,
                name: names[feature].clone(),
                op,
                threshold,
            }),
        }
    }
    out
}

fn surrogate_tree(x: &Matrix, tau: &[f64], spec: &RuleExtractionSpec) -> Result<RegressionTree> {
    let n = tau.len();
    let min_leaf = ((spec.min_support * n as f64).ceil() as usize).max(1);
    if n < 2 * min_leaf {
        let m = tau.iter().sum::<f64>() / n as f64;
        return Ok(RegressionTree::constant(x.cols(), m));
    }
    // squared error from a zero start: leaf weights are leaf means of τ̂
    let gh = GradHess::new(tau.iter().map(|t| -2.0 * t).collect(), vec![2.0; n])?;
    let params = TreeParams {
        max_depth: spec.surrogate_depth,
        min_samples_leaf: min_leaf,
        split_reg_lambda: 0.0,
        leaf_penalty_gamma: 0.0,
        ..Default::default()
    };
    fit_tree(x, &gh, &params)
}

pub fn extract_rules<M: CateEstimator + ?Sized>(model: &M, ds: &CausalDataset, spec: &RuleExtractionSpec) -> Result<RuleSet> {
    spec.validate()?;
    if model.n_features() != ds.d() {
        return Err(CbdtError::validation(format!(
            "model expects {} covariates, dataset has {}",
            model.n_features(),
            ds.d()
        )));
    }
    let x = ds.features();
    let tau = model.predict_cate(x)?;
    let surrogate = surrogate_tree(x, &tau, spec)?;
    let n = ds.n();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); surrogate.nodes.len()];
    for i in 0..n {
        members[surrogate.leaf_index(x.row(i))].push(i);
    }
    let mut rules = Vec::new();
    let mut diagnostics = Vec::new();
    for (k, (leaf, path)) in surrogate.paths().into_iter().enumerate() {
        let rows = &members[leaf];
        let support = rows.len() as f64 / n as f64;
        if rows.is_empty() || support < spec.min_support {
            diagnostics.push(format!(
                "leaf {leaf} covers {} rows ({:.1}%), below min_support",
                rows.len(),
                100.0 * support
            ));
            continue;
        }
        let values: Vec<f64> = rows.iter().map(|&i| tau[i]).collect();
        let ci = bootstrap_mean(&values, spec.bootstrap_draws, spec.ci_level, spec.seed.wrapping_add(k as u64))?;
        rules.push(CausalRule {
            conditions: simplify(&path, ds.feature_names()),
            effect_estimate: ci.estimate,
            ci: (ci.lo.min(ci.estimate), ci.hi.max(ci.estimate)),
            support_count: rows.len(),
            support_fraction: support,
        });
    }
    if rules.is_empty() {
        diagnostics.push("no surrogate leaf reached min_support; no rules extracted".into());
    }
    Ok(RuleSet {
        rules,
        surrogate,
        n_rows: n,
        spec: spec.clone(),
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fidelity {
    /// `1 − MSE(rule effect, τ̂) / Var(τ̂)` over covered rows, clipped to `[0, 1]`.
    pub fidelity: f64,
    pub covered_fraction: f64,
}

pub fn rule_fidelity<M: CateEstimator + ?Sized>(rules: &RuleSet, model: &M, ds: &CausalDataset) -> Result<Fidelity> {
    let x = ds.features();
    let tau = model.predict_cate(x)?;
    let mut pairs = Vec::new();
    for (i, t) in tau.iter().enumerate() {
        if let Some(r) = rules.rule_for(x.row(i)) {
            pairs.push((rules.rules[r].effect_estimate, *t));
        }
    }
    if pairs.is_empty() {
        return Err(CbdtError::validation("no row is covered by any rule"));
    }
    let m = pairs.len() as f64;
    let mean = pairs.iter().map(|p| p.1).sum::<f64>() / m;
    let var = pairs.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / m;
    let mse = pairs.iter().map(|p| (p.0 - p.1).powi(2)).sum::<f64>() / m;
    let scale = pairs.iter().fold(1.0f64, |s, p| s.max(p.1.abs()));
    let fidelity = if var <= 1e-24 * scale * scale {
        if mse <= 1e-20 * scale * scale {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - mse / var).clamp(0.0, 1.0)
    };
    Ok(Fidelity {
        fidelity,
        covered_fraction: m / ds.n() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthCheck {
    pub rule: usize,
    pub true_effect: f64,
    pub deviation: f64,
    pub ci_covers_truth: bool,
}

/// Compare each rule's effect with the mean true effect over the rows it covers.
pub fn rule_truth_check(rules: &RuleSet, ds: &CausalDataset) -> Result<Vec<TruthCheck>> {
    let truth = ds.true_cate().ok_or_else(|| {
        CbdtError::validation("rule truth check needs mu0/mu1 columns (use synthetic or IHDP data)")
    })?;
    let x = ds.features();
    let mut sums = vec![(0.0, 0usize); rules.rules.len()];
    for (i, t) in truth.iter().enumerate() {
        if let Some(r) = rules.rule_for(x.row(i)) {
            sums[r].0 += t;
            sums[r].1 += 1;
        }
    }
    Ok(rules
        .rules
        .iter()
        .enumerate()
        .filter(|(k, _)| sums[*k].1 > 0)
        .map(|(k, rule)| {
            let true_effect = sums[k].0 / sums[k].1 as f64;
            TruthCheck {
                rule: k,
                true_effect,
                deviation: (rule.effect_estimate - true_effect).abs(),
                ci_covers_truth: rule.ci.0 <= true_effect && true_effect <= rule.ci.1,
            }
        })
        .collect())
}

/// Split features and thresholds of the surrogate's internal nodes.
pub fn surrogate_splits(rules: &RuleSet) -> Vec<(usize, f64)> {
    rules
        .surrogate
        .nodes
        .iter()
        .filter_map(|n| match n {
            Node::Split { feature, threshold, .. } => Some((*feature, *threshold)),
            Node::Leaf { .. } => None,
        })
        .collect()
}
