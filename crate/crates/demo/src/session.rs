//! Demo operations in plain Rust; the browser bindings wrap these.

use cbdt::booster::{self, BoostedModel, BoosterConfig};
use cbdt::dataset::{generate_synthetic, CausalDataset, EffectShape, SyntheticSpec};
use cbdt::evaluation::{ate_error, eap, pehe};
use cbdt::rules::{extract_rules, rule_fidelity, rule_truth_check, RuleExtractionSpec};
use cbdt::schedule::ScheduleMode;
use cbdt::{CbdtError, Result};
use serde::{Deserialize, Serialize};

/// Points sent back for the effect scatter plot.
const PLOT_POINTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    Smooth,
    Step,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOptions {
    pub surface: Surface,
    pub n: usize,
    pub noise_sigma: f64,
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub eta: f64,
    pub dynamic: bool,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            surface: Surface::Smooth,
            n: 1000,
            noise_sigma: 1.0,
            rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
            lambda: 1.0,
            alpha: 1.0,
            eta: 0.05,
            dynamic: true,
            seed: 0,
        }
    }
}

impl TrainOptions {
    fn spec(&self, seed: u64) -> SyntheticSpec {
        let shape = match self.surface {
            Surface::Smooth => EffectShape::Smooth,
            Surface::Step => EffectShape::Step {
                feature: 0,
                threshold: 0.5,
                low: 0.0,
                high: 2.0,
            },
        };
        SyntheticSpec {
            n: self.n,
            d: 5,
            noise_sigma: self.noise_sigma,
            shape,
            seed,
            ..Default::default()
        }
    }

    fn booster(&self) -> BoosterConfig {
        let mut config = BoosterConfig {
            num_rounds: self.rounds,
            learning_rate: self.learning_rate,
            seed: self.seed,
            ..Default::default()
        };
        config.loss.lambda = self.lambda;
        config.loss.alpha = self.alpha;
        config.schedule.eta = self.eta;
        config.schedule.mode = if self.dynamic { ScheduleMode::Dynamic } else { ScheduleMode::Static };
        config.tree.max_depth = self.max_depth;
        config.nuisance.rounds = 50;
        config
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSummary {
    pub pehe_sqrt: f64,
    pub ate_true: f64,
    pub ate_hat: f64,
    pub ate_error: f64,
    pub tau_ref: f64,
    pub rounds: usize,
    /// Per-round composite loss and regularizer weights.
    pub loss: Vec<f64>,
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `(x0, estimated effect, true effect)` for a subsample of test rows.
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleView {
    pub text: String,
    pub effect: f64,
    pub ci: (f64, f64),
    pub support: f64,
    pub true_effect: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RulesSummary {
    pub rules: Vec<RuleView>,
    pub fidelity: f64,
    pub covered_fraction: f64,
    pub diagnostics: Vec<String>,
}

/// A trained model with the data it was fitted on and a held-out test set.
pub struct Session {
    model: BoostedModel,
    train: CausalDataset,
}

impl Session {
    pub fn train(options: &TrainOptions) -> Result<(Session, TrainSummary)> {
        let train = generate_synthetic(&options.spec(options.seed))?;
        let test = generate_synthetic(&options.spec(options.seed.wrapping_add(1)))?;
        let model = booster::fit(&options.booster(), &train)?;

        let tau_hat = model.predict_cate(test.features())?;
        let tau_true = test.true_cate().expect("simulated data has potential outcomes");
        let ate_hat = tau_hat.iter().sum::<f64>() / tau_hat.len() as f64;
        let ate_true = tau_true.iter().sum::<f64>() / tau_true.len() as f64;
        let step = (test.n() / PLOT_POINTS).max(1);
        let points = (0..test.n())
            .step_by(step)
            .map(|i| (test.features().row(i)[0], tau_hat[i], tau_true[i]))
            .collect();
        let records = &model.trace.records;
        let summary = TrainSummary {
            pehe_sqrt: pehe(&tau_hat, &tau_true)?.sqrt,
            ate_true,
            ate_hat,
            ate_error: ate_error(ate_hat, ate_true),
            tau_ref: model.tau_ref.value,
            rounds: model.rounds(),
            loss: records.iter().map(|r| r.loss).collect(),
            lambda: records.iter().map(|r| r.lambda).collect(),
            alpha: records.iter().map(|r| r.alpha).collect(),
            points,
        };
        Ok((Session { model, train }, summary))
    }

    pub fn rules(&self, depth: usize, min_support: f64) -> Result<RulesSummary> {
        let spec = RuleExtractionSpec {
            surrogate_depth: depth,
            min_support,
            bootstrap_draws: 200,
            ..Default::default()
        };
        let set = extract_rules(&self.model, &self.train, &spec)?;
        let fidelity = rule_fidelity(&set, &self.model, &self.train)?;
        let truth = rule_truth_check(&set, &self.train)?;
        let rules = set
            .rules
            .iter()
            .zip(&truth)
            .map(|(r, t)| RuleView {
                text: r.to_string(),
                effect: r.effect_estimate,
                ci: r.ci,
                support: r.support_fraction,
                true_effect: t.true_effect,
            })
            .collect();
        Ok(RulesSummary {
            rules,
            fidelity: fidelity.fidelity,
            covered_fraction: fidelity.covered_fraction,
            diagnostics: set.diagnostics,
        })
    }

    pub fn model_json(&self) -> Result<String> {
        self.model.to_json()
    }
}

/// Efficiency-adjusted PEHE for the given costs.
pub fn efficiency(pehe_sqrt: f64, train_seconds: f64, infer_ms: f64) -> Result<f64> {
    eap(pehe_sqrt, train_seconds, infer_ms)
}

pub fn parse_options(json: &str) -> Result<TrainOptions> {
    let options: TrainOptions = serde_json::from_str(json)
        .map_err(|e| CbdtError::Validation(format!("train options: {e}")))?;
    if options.n < 50 || options.n > 20_000 {
        return Err(CbdtError::Validation(format!("n must lie in [50, 20000], got {}", options.n)));
    }
    Ok(options)
}
