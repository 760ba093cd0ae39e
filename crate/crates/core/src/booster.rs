//! The causal boosting loop.
//!
//! Two heads are supported:
//!
//! * `outcome_contrast` boosts one outcome model `Ŷ(t, x)` over the
//!   treatment flag (feature 0) and the covariates. Trees are fitted to the
//!   composite loss gradients at the working predictions, and the effect is
//!   the contrast `Ŷ(1, x) − Ŷ(0, x)`. The contrast residual
//!   `(y − Ŷ(t, x)) − (Ŷ(1, x) − Ŷ(0, x))` is tracked in the trace.
//! * `doubly_robust` boosts an effect model `τ̂(x)` with cross-fitted
//!   nuisances, so the implied outcome is `m̂(x) + τ̂(x)(t − ê(x))` and its
//!   residual is `y − m̂(x) − τ̂(x)(t − ê(x))`. Gradients reach `τ̂` through
//!   the factor `(t − ê)`.
//!
//! Each round: fit a tree at the current regularization weights, step the
//! scheduler with the variance of the squared-error gradients, then take
//! one gradient step on the regularizer terms. That step is not stored in
//! any tree; it shifts the working predictions the next round's gradients
//! are computed from.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clock::Stopwatch;
use crate::dataset::CausalDataset;
use crate::error::{CbdtError, Result};
use crate::gbdt::{fit_tree_binned, BinnedMatrix, GbdtParams, GradHess, RegressionTree, TreeParams};
use crate::matrix::Matrix;
use crate::nuisance::{aipw_scores, fit_nuisance, NuisanceEstimates, NuisanceModels};
use crate::objective::{
    loss_grad_hess, loss_value, mse_gradient_variance, regularizer_grad_hess, CompositeLossParams,
};
use crate::persist;
use crate::schedule::{ScheduleConfig, SchedulerState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    #[default]
    OutcomeContrast,
    DoublyRobust,
}

impl std::str::FromStr for ResidualMode {
    type Err = CbdtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "outcome_contrast" => Ok(ResidualMode::OutcomeContrast),
            "doubly_robust" => Ok(ResidualMode::DoublyRobust),
            other => Err(CbdtError::validation(format!(
                "residual_mode: unknown value {other:?} (expected outcome_contrast or doubly_robust)"
            ))),
        }
    }
}

/// Where the reference ATE of the calibration term comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TauRefSource {
    /// Cross-fitted AIPW estimate on the training data.
    #[default]
    Aipw,
    /// Mean of `mu1 − mu0`; only for simulated data.
    GroundTruth,
    /// `loss.tau_ref` as configured.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoosterConfig {
    pub num_rounds: usize,
    pub learning_rate: f64,
    pub residual_mode: ResidualMode,
    pub loss: CompositeLossParams,
    pub tau_ref_source: TauRefSource,
    pub schedule: ScheduleConfig,
    pub tree: TreeParams,
    /// Use the scheduled `λ` as the split-gain regularizer. When false,
    /// `tree.split_reg_lambda` is used unchanged.
    pub couple_split_lambda: bool,
    /// Boosting settings for the cross-fitted nuisance models.
    pub nuisance: GbdtParams,
    /// Keep every round's working predictions in the trace.
    pub record_predictions: bool,
    pub seed: u64,
}

impl Default for BoosterConfig {
    fn default() -> Self {
        BoosterConfig {
            num_rounds: 300,
            learning_rate: 0.1,
            residual_mode: ResidualMode::OutcomeContrast,
            loss: CompositeLossParams::default(),
            tau_ref_source: TauRefSource::Aipw,
            schedule: ScheduleConfig::default(),
            tree: TreeParams::default(),
            couple_split_lambda: true,
            nuisance: GbdtParams::default(),
            record_predictions: false,
            seed: 0,
        }
    }
}

impl BoosterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_rounds == 0 {
            return Err(CbdtError::validation("num_rounds must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(CbdtError::validation(format!(
                "learning_rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        self.loss.validate()?;
        self.schedule.validate()?;
        self.tree.validate()?;
        self.nuisance.validate()
    }

    /// Whether fitting needs cross-fitted nuisance models.
    pub fn needs_nuisance(&self) -> bool {
        self.residual_mode == ResidualMode::DoublyRobust
            || (self.tau_ref_source == TauRefSource::Aipw && self.loss.alpha > 0.0)
    }
}

/// The reference ATE actually used, with where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauRef {
    pub value: f64,
    pub source: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Composite loss at the end of the round, weighted by this round's `λ`, `α`.
    pub loss: f64,
    /// Variance of `2(ŷ − y)` at the start of the round.
    pub grad_variance: f64,
    /// Weights used during this round (before the scheduler step).
    pub lambda: f64,
    pub alpha: f64,
    pub split_lambda: f64,
    /// Root mean square of the round's pseudo-residuals.
    pub residual_rms: f64,
    pub floor_hit: bool,
    #[serde(skip)]
    pub seconds: f64,
}

impl PartialEq for TraceRecord {
    // wall-clock time is not part of a record's identity
    fn eq(&self, other: &Self) -> bool {
        self.iteration == other.iteration
            && self.loss.to_bits() == other.loss.to_bits()
            && self.grad_variance.to_bits() == other.grad_variance.to_bits()
            && self.lambda.to_bits() == other.lambda.to_bits()
            && self.alpha.to_bits() == other.alpha.to_bits()
            && self.split_lambda.to_bits() == other.split_lambda.to_bits()
            && self.residual_rms.to_bits() == other.residual_rms.to_bits()
            && self.floor_hit == other.floor_hit
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// Working predictions after each round, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions: Option<Vec<Vec<f64>>>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "iteration",
            "loss",
            "grad_variance",
            "lambda",
            "alpha",
            "split_lambda",
            "residual_rms",
            "floor_hit",
            "seconds",
        ])?;
        for r in &self.records {
            w.write_record([
                r.iteration.to_string(),
                r.loss.to_string(),
                r.grad_variance.to_string(),
                r.lambda.to_string(),
                r.alpha.to_string(),
                r.split_lambda.to_string(),
                r.residual_rms.to_string(),
                r.floor_hit.to_string(),
                format!("{:.6}", r.seconds),
            ])?;
        }
        w.flush().map_err(|e| CbdtError::io("<csv writer>", e))?;
        Ok(())
    }
}

/// A trained causal booster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub mode: ResidualMode,
    /// Number of covariates (the treatment flag is not counted).
    pub n_features: usize,
    pub base_score: f64,
    pub learning_rate: f64,
    /// Trees over `(t, x)`; used in `outcome_contrast` mode.
    pub outcome_trees: Vec<RegressionTree>,
    /// Trees over `x`; used in `doubly_robust` mode.
    pub effect_trees: Vec<RegressionTree>,
    pub tau_ref: TauRef,
    pub trace: Trace,
    pub config: BoosterConfig,
}

pub const MODEL_KIND: &str = "cbdt";

impl BoostedModel {
    /// A model with no trees.
    pub fn empty(config: BoosterConfig, n_features: usize, base_score: f64) -> Self {
        BoostedModel {
            mode: config.residual_mode,
            n_features,
            base_score,
            learning_rate: config.learning_rate,
            outcome_trees: Vec::new(),
            effect_trees: Vec::new(),
            tau_ref: TauRef {
                value: config.loss.tau_ref,
                source: "fixed".into(),
            },
            trace: Trace::default(),
            config,
        }
    }

    pub fn rounds(&self) -> usize {
        match self.mode {
            ResidualMode::OutcomeContrast => self.outcome_trees.len(),
            ResidualMode::DoublyRobust => self.effect_trees.len(),
        }
    }

    fn check_dim(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.n_features {
            return Err(CbdtError::validation(format!(
                "model expects {} covariates, got {}",
                self.n_features,
                x.cols()
            )));
        }
        Ok(())
    }

    fn sum_trees(&self, trees: &[RegressionTree], x: &Matrix) -> Vec<f64> {
        let mut out = vec![self.base_score; x.rows()];
        for tree in trees {
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.learning_rate * tree.predict_row(x.row(i));
            }
        }
        out
    }

    /// Outcome head `Ŷ(t, x)`.
    pub fn predict_outcome(&self, x: &Matrix, treatment: &[u8]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        if self.mode != ResidualMode::OutcomeContrast {
            return Err(CbdtError::validation("a doubly_robust model has no outcome head"));
        }
        let t: Vec<f64> = treatment.iter().map(|&v| f64::from(v)).collect();
        let xa = x.prepend_column(&t)?;
        Ok(self.sum_trees(&self.outcome_trees, &xa))
    }

    pub fn predict_cate(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.predict_cate_rounds(x, self.rounds())
    }

    /// Effect estimate using only the first `rounds` trees.
    pub fn predict_cate_rounds(&self, x: &Matrix, rounds: usize) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let rounds = rounds.min(self.rounds());
        match self.mode {
            ResidualMode::OutcomeContrast => {
                let trees = &self.outcome_trees[..rounds];
                let treated = self.sum_trees(trees, &x.prepend_constant(1.0));
                let control = self.sum_trees(trees, &x.prepend_constant(0.0));
                Ok(treated.iter().zip(&control).map(|(a, b)| a - b).collect())
            }
            ResidualMode::DoublyRobust => Ok(self.sum_trees(&self.effect_trees[..rounds], x)),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        persist::to_json(MODEL_KIND, self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        persist::from_json(MODEL_KIND, text, "<string>")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        persist::save(MODEL_KIND, self, path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        persist::load(MODEL_KIND, path)
    }
}

/// Contrast residuals `(y − Ŷ(t, x)) − (Ŷ(1, x) − Ŷ(0, x))` of an outcome-head model.
pub fn residuals_outcome_contrast(model: &BoostedModel, ds: &CausalDataset) -> Result<Vec<f64>> {
    let fitted = model.predict_outcome(ds.features(), ds.treatment())?;
    let contrast = model.predict_cate(ds.features())?;
    Ok((0..ds.n()).map(|i| (ds.outcome()[i] - fitted[i]) - contrast[i]).collect())
}

/// Doubly robust residuals `y − m̂(x) − τ̂(x)(t − ê(x))`.
pub fn residuals_doubly_robust(
    model: &BoostedModel,
    nuisance: &NuisanceEstimates,
    ds: &CausalDataset,
) -> Result<Vec<f64>> {
    if nuisance.len() != ds.n() {
        return Err(CbdtError::validation(format!(
            "{} nuisance predictions for {} rows",
            nuisance.len(),
            ds.n()
        )));
    }
    if let Some(i) = nuisance.e_hat.iter().position(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(CbdtError::numerical(format!(
            "propensity {} at row {i} is outside (0, 1)",
            nuisance.e_hat[i]
        )));
    }
    let tau = model.predict_cate(ds.features())?;
    Ok((0..ds.n())
        .map(|i| {
            let t = f64::from(ds.treatment()[i]);
            ds.outcome()[i] - nuisance.m_hat[i] - tau[i] * (t - nuisance.e_hat[i])
        })
        .collect())
}

pub fn fit(config: &BoosterConfig, ds: &CausalDataset) -> Result<BoostedModel> {
    fit_with_nuisance(config, ds, None)
}

/// Like [`fit`], reusing nuisance models already cross-fitted on `ds`.
pub fn fit_with_nuisance(
    config: &BoosterConfig,
    ds: &CausalDataset,
    nuisance: Option<&NuisanceModels>,
) -> Result<BoostedModel> {
    config.validate()?;
    let owned;
    let nuisance = match nuisance {
        Some(nm) => {
            if nm.cross_fitted.len() != ds.n() {
                return Err(CbdtError::validation(format!(
                    "nuisance models were fitted on {} rows, dataset has {}",
                    nm.cross_fitted.len(),
                    ds.n()
                )));
            }
            Some(nm)
        }
        None if config.needs_nuisance() => {
            owned = fit_nuisance(ds, &config.nuisance, config.seed)?;
            Some(&owned)
        }
        None => None,
    };
    let tau_ref = resolve_tau_ref(config, ds, nuisance)?;
    let mut loop_state = Loop::new(config, ds, nuisance.map(|nm| &nm.cross_fitted), tau_ref.value)?;
    loop_state.run()?;
    let Loop { model, trace, .. } = loop_state;
    let mut model = model;
    model.tau_ref = tau_ref;
    model.trace = trace;
    Ok(model)
}

fn resolve_tau_ref(config: &BoosterConfig, ds: &CausalDataset, nuisance: Option<&NuisanceModels>) -> Result<TauRef> {
    if config.loss.alpha == 0.0 && config.tau_ref_source != TauRefSource::Fixed {
        return Ok(TauRef {
            value: 0.0,
            source: "unused (alpha = 0)".into(),
        });
    }
    match config.tau_ref_source {
        TauRefSource::Fixed => Ok(TauRef {
            value: config.loss.tau_ref,
            source: "fixed".into(),
        }),
        TauRefSource::GroundTruth => {
            let value = ds.true_ate().ok_or_else(|| {
                CbdtError::validation("tau_ref_source = ground_truth needs mu0/mu1 columns in the training data")
            })?;
            Ok(TauRef {
                value,
                source: "ground_truth".into(),
            })
        }
        TauRefSource::Aipw => {
            let nm = nuisance.expect("nuisance fitted when tau_ref_source = aipw");
            let scores = aipw_scores(ds.treatment(), ds.outcome(), &nm.cross_fitted)?;
            Ok(TauRef {
                value: scores.iter().sum::<f64>() / scores.len() as f64,
                source: "aipw_cross_fitted".into(),
            })
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

struct Loop<'a> {
    config: &'a BoosterConfig,
    ds: &'a CausalDataset,
    nuisance: Option<&'a NuisanceEstimates>,
    tau_ref: f64,
    binned: BinnedMatrix,
    /// Model-implied outcome for each training row.
    fitted: Vec<f64>,
    /// Outcome-head predictions with the flag forced to 1 and 0.
    fitted_treated: Vec<f64>,
    fitted_control: Vec<f64>,
    x_treated: Option<Matrix>,
    x_control: Option<Matrix>,
    /// Current effect estimate per row (effect head only).
    tau: Vec<f64>,
    /// Regularizer step folded into the working predictions.
    correction: Vec<f64>,
    scheduler: SchedulerState,
    model: BoostedModel,
    trace: Trace,
}

impl<'a> Loop<'a> {
    fn new(
        config: &'a BoosterConfig,
        ds: &'a CausalDataset,
        nuisance: Option<&'a NuisanceEstimates>,
        tau_ref: f64,
    ) -> Result<Self> {
        let n = ds.n();
        let scheduler = SchedulerState::new(config.schedule.clone(), config.loss.lambda, config.loss.alpha)?;
        let (binned, fitted, base, x_treated, x_control) = match config.residual_mode {
            ResidualMode::OutcomeContrast => {
                let xa = ds.features().prepend_column(&ds.treatment_f64())?;
                let base = mean(ds.outcome());
                (
                    BinnedMatrix::new(&xa, &config.tree),
                    vec![base; n],
                    base,
                    Some(ds.features().prepend_constant(1.0)),
                    Some(ds.features().prepend_constant(0.0)),
                )
            }
            ResidualMode::DoublyRobust => {
                let nm = nuisance.ok_or_else(|| CbdtError::validation("doubly_robust mode needs nuisance models"))?;
                (BinnedMatrix::new(ds.features(), &config.tree), nm.m_hat.clone(), 0.0, None, None)
            }
        };
        let mut model = BoostedModel::empty(config.clone(), ds.d(), base);
        model.outcome_trees.reserve(config.num_rounds);
        Ok(Loop {
            config,
            ds,
            nuisance,
            tau_ref,
            binned,
            fitted,
            fitted_treated: vec![base; n],
            fitted_control: vec![base; n],
            x_treated,
            x_control,
            tau: vec![0.0; n],
            correction: vec![0.0; n],
            scheduler,
            model,
            trace: Trace {
                records: Vec::with_capacity(config.num_rounds),
                predictions: config.record_predictions.then(Vec::new),
            },
        })
    }

    fn loss_params(&self) -> CompositeLossParams {
        CompositeLossParams {
            lambda: self.scheduler.lambda_k,
            alpha: self.scheduler.alpha_k,
            tau_ref: self.tau_ref,
            ..self.config.loss.clone()
        }
    }

    fn working(&self) -> Vec<f64> {
        self.fitted.iter().zip(&self.correction).map(|(f, c)| f + c).collect()
    }

    fn residual_rms(&self) -> f64 {
        let y = self.ds.outcome();
        let sum: f64 = match self.config.residual_mode {
            // the fitted values already include m̂ + τ̂(t − ê)
            ResidualMode::DoublyRobust => y.iter().zip(&self.fitted).map(|(y, f)| (y - f).powi(2)).sum(),
            ResidualMode::OutcomeContrast => (0..y.len())
                .map(|i| {
                    let r = (y[i] - self.fitted[i]) - (self.fitted_treated[i] - self.fitted_control[i]);
                    r * r
                })
                .sum(),
        };
        (sum / y.len() as f64).sqrt()
    }

    fn diverged(&self, iteration: usize, message: String) -> CbdtError {
        CbdtError::Diverged {
            iteration,
            message,
            trace: Box::new(self.trace.clone()),
        }
    }

    fn run(&mut self) -> Result<()> {
        let y = self.ds.outcome();
        let t = self.ds.treatment();
        let nu = self.config.learning_rate;
        for iteration in 1..=self.config.num_rounds {
            let clock = Stopwatch::start();
            let params = self.loss_params();
            let split_lambda = if self.config.couple_split_lambda {
                self.scheduler.lambda_k
            } else {
                self.config.tree.split_reg_lambda
            };
            let tree_params = TreeParams {
                split_reg_lambda: split_lambda,
                ..self.config.tree.clone()
            };
            let residual_rms = self.residual_rms();
            let working = self.working();
            let grad_variance = mse_gradient_variance(&working, y)?;
            if !grad_variance.is_finite() {
                return Err(self.diverged(iteration, "gradient variance is not finite".into()));
            }
            let mut gh = loss_grad_hess(&working, y, t, &params)?;
            if let Some(nm) = self.nuisance.filter(|_| self.config.residual_mode == ResidualMode::DoublyRobust) {
                gh = effect_grad_hess(gh, t, &nm.e_hat);
            }
            let fitted_tree = fit_tree_binned(&self.binned, &gh, &tree_params)?;
            let step = fitted_tree.train_predictions();
            match self.config.residual_mode {
                ResidualMode::OutcomeContrast => {
                    let (xt, xc) = (self.x_treated.as_ref().unwrap(), self.x_control.as_ref().unwrap());
                    for i in 0..y.len() {
                        self.fitted[i] += nu * step[i];
                        self.fitted_treated[i] += nu * fitted_tree.tree.predict_row(xt.row(i));
                        self.fitted_control[i] += nu * fitted_tree.tree.predict_row(xc.row(i));
                    }
                    self.model.outcome_trees.push(fitted_tree.tree);
                }
                ResidualMode::DoublyRobust => {
                    let nm = self.nuisance.expect("checked in new");
                    for i in 0..y.len() {
                        self.tau[i] += nu * step[i];
                        self.fitted[i] = nm.m_hat[i] + self.tau[i] * (f64::from(t[i]) - nm.e_hat[i]);
                    }
                    self.model.effect_trees.push(fitted_tree.tree);
                }
            }
            self.scheduler.step(grad_variance)?;
            let floor_hit = self.scheduler.history.last().is_some_and(|h| h.floor_hit);

            let refine = regularizer_grad_hess(&self.fitted, y, t, &self.loss_params())?;
            for (c, g) in self.correction.iter_mut().zip(&refine.g) {
                *c = -nu * g;
            }
            let working = self.working();
            let loss = loss_value(&working, y, t, &params)?;
            if !loss.is_finite() {
                return Err(self.diverged(iteration, format!("loss is {loss}")));
            }
            if let Some(p) = self.trace.predictions.as_mut() {
                p.push(working);
            }
            self.trace.records.push(TraceRecord {
                iteration,
                loss,
                grad_variance,
                lambda: params.lambda,
                alpha: params.alpha,
                split_lambda,
                residual_rms,
                floor_hit,
                seconds: clock.seconds(),
            });
        }
        Ok(())
    }
}

/// Chain rule from `ŷ = m̂ + τ̂(t − ê)` to `τ̂`.
fn effect_grad_hess(gh: GradHess, treatment: &[u8], e_hat: &[f64]) -> GradHess {
    let GradHess { mut g, mut h } = gh;
    for i in 0..g.len() {
        let d = f64::from(treatment[i]) - e_hat[i];
        g[i] *= d;
        h[i] *= d * d;
    }
    GradHess { g, h }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticSpec};

    fn small_config() -> BoosterConfig {
        BoosterConfig {
            num_rounds: 20,
            nuisance: GbdtParams {
                rounds: 20,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn data(n: usize, seed: u64) -> CausalDataset {
        generate_synthetic(&SyntheticSpec {
            n,
            d: 4,
            seed,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn empty_model_predicts_zero_effect() {
        let ds = data(50, 1);
        let model = BoostedModel::empty(BoosterConfig::default(), ds.d(), 0.0);
        assert!(model.predict_cate(ds.features()).unwrap().iter().all(|v| *v == 0.0));
        assert_eq!(residuals_outcome_contrast(&model, &ds).unwrap(), ds.outcome());
    }

    #[test]
    fn trace_length_matches_rounds() {
        let ds = data(300, 2);
        let model = fit(&small_config(), &ds).unwrap();
        assert_eq!(model.trace.len(), 20);
        assert_eq!(model.rounds(), 20);
        assert_eq!(model.tau_ref.source, "aipw_cross_fitted");
    }

    #[test]
    fn doubly_robust_mode_trains_effect_head() {
        let ds = data(300, 3);
        let config = BoosterConfig {
            residual_mode: ResidualMode::DoublyRobust,
            ..small_config()
        };
        let model = fit(&config, &ds).unwrap();
        assert!(model.outcome_trees.is_empty());
        assert_eq!(model.effect_trees.len(), 20);
        assert!(model.predict_outcome(ds.features(), ds.treatment()).is_err());
        assert!(model.predict_cate(ds.features()).unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn ground_truth_reference_requires_potential_outcomes() {
        let ds = data(100, 4);
        let bare = CausalDataset::new(
            ds.features().clone(),
            ds.treatment().to_vec(),
            ds.outcome().to_vec(),
            ds.feature_names().to_vec(),
        )
        .unwrap();
        let config = BoosterConfig {
            tau_ref_source: TauRefSource::GroundTruth,
            ..small_config()
        };
        assert!(fit(&config, &bare).is_err());
        assert_eq!(fit(&config, &ds).unwrap().tau_ref.value, ds.true_ate().unwrap());
    }

    #[test]
    fn dimension_mismatch_on_predict() {
        let ds = data(100, 5);
        let model = fit(&small_config(), &ds).unwrap();
        assert!(model.predict_cate(&Matrix::zeros(3, 7)).is_err());
    }

    #[test]
    fn bad_mode_string_names_the_field() {
        let err = "tlearner".parse::<ResidualMode>().unwrap_err().to_string();
        assert!(err.contains("residual_mode") && err.contains("outcome_contrast"));
    }
}
