//! Per-iteration update of the variance weight `λ` and the ATE weight `α`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{CbdtError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// `λ ← λ·exp(−η·Var)`, `α ← α·exp(−η′·Var)`.
    #[default]
    Dynamic,
    /// `λ_k = λ_0/√k`, `α_k = α_0/√k`.
    Decay,
    /// Weights never change.
    Static,
}

impl std::str::FromStr for ScheduleMode {
    type Err = CbdtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dynamic" => Ok(ScheduleMode::Dynamic),
            "decay" => Ok(ScheduleMode::Decay),
            "static" => Ok(ScheduleMode::Static),
            other => Err(CbdtError::validation(format!(
                "unknown schedule mode {other:?} (expected dynamic, decay or static)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    pub mode: ScheduleMode,
    /// Update rate for `λ`.
    pub eta: f64,
    /// Update rate for `α`; `None` reuses `eta`.
    pub eta_prime: Option<f64>,
    /// Lower bound for a weight that started positive.
    pub floor: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            mode: ScheduleMode::Dynamic,
            eta: 0.05,
            eta_prime: None,
            floor: 1e-8,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        let eta_prime = self.eta_prime();
        for (name, v) in [("eta", self.eta), ("eta_prime", eta_prime), ("floor", self.floor)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CbdtError::validation(format!("schedule.{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn eta_prime(&self) -> f64 {
        self.eta_prime.unwrap_or(self.eta)
    }
}

/// One scheduler step: the variance fed in and the weights it produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub k: usize,
    pub grad_variance: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub floor_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerState {
    pub config: ScheduleConfig,
    pub lambda_0: f64,
    pub alpha_0: f64,
    pub lambda_k: f64,
    pub alpha_k: f64,
    pub k: usize,
    pub history: Vec<ScheduleRecord>,
}

impl SchedulerState {
    pub fn new(config: ScheduleConfig, lambda_0: f64, alpha_0: f64) -> Result<Self> {
        config.validate()?;
        for (name, v) in [("lambda", lambda_0), ("alpha", alpha_0)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CbdtError::validation(format!("initial {name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(SchedulerState {
            config,
            lambda_0,
            alpha_0,
            lambda_k: lambda_0,
            alpha_k: alpha_0,
            k: 0,
            history: Vec::new(),
        })
    }

    /// Advance one iteration given the variance of the squared-error gradients.
    pub fn step(&mut self, grad_variance: f64) -> Result<()> {
        if !grad_variance.is_finite() || grad_variance < 0.0 {
            return Err(CbdtError::numerical(format!(
                "gradient variance {grad_variance} at scheduler step {}",
                self.k + 1
            )));
        }
        let (lambda, alpha) = match self.config.mode {
            ScheduleMode::Dynamic => (
                self.lambda_k * (-self.config.eta * grad_variance).exp(),
                self.alpha_k * (-self.config.eta_prime() * grad_variance).exp(),
            ),
            ScheduleMode::Decay => {
                let root = ((self.k + 1) as f64).sqrt();
                (self.lambda_0 / root, self.alpha_0 / root)
            }
            ScheduleMode::Static => (self.lambda_k, self.alpha_k),
        };
        // The floor never lifts a weight above its previous value, so a weight
        // that starts at zero stays zero and the sequence stays non-increasing.
        let floor = self.config.floor;
        let (lambda, hit_l) = apply_floor(lambda, self.lambda_k, floor);
        let (alpha, hit_a) = apply_floor(alpha, self.alpha_k, floor);
        self.lambda_k = lambda;
        self.alpha_k = alpha;
        self.k += 1;
        self.history.push(ScheduleRecord {
            k: self.k,
            grad_variance,
            lambda,
            alpha,
            floor_hit: hit_l || hit_a,
        });
        Ok(())
    }

    pub fn write_history_csv<W: Write>(&self, out: W) -> Result<()> {
        write_history_csv(&self.history, out)
    }
}

fn apply_floor(value: f64, previous: f64, floor: f64) -> (f64, bool) {
    let bound = previous.min(floor);
    if value < bound {
        (bound, true)
    } else {
        (value, false)
    }
}

/// CSV with columns `k,grad_variance,lambda,alpha`.
pub fn write_history_csv<W: Write>(history: &[ScheduleRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "grad_variance", "lambda", "alpha"])?;
    for r in history {
        w.write_record([
            r.k.to_string(),
            r.grad_variance.to_string(),
            r.lambda.to_string(),
            r.alpha.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CbdtError::io("<csv writer>", e))?;
    Ok(())
}
