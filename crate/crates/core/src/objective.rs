//! Composite causal loss on outcome predictions `ŷ`:
//!
//! ```text
//! L(ŷ) = Σ (ŷ_i − y_i)²
//!      + λ [ (1/n_t) Σ_{W=1} (ŷ_i − ȳ̂_t)² + (1/n_c) Σ_{W=0} (ŷ_i − ȳ̂_c)² ]
//!      + γ (ȳ̂ − ȳ)²
//!      + α (τ̂_ATE − τ_ref)²,      τ̂_ATE = ȳ̂_t − ȳ̂_c
//! ```
//!
//! The squared-error term is an unnormalized sum while the three
//! regularizers are normalized by group sizes, so the regularizers' relative
//! weight shrinks as `n` grows.
//!
//! Gradients follow the per-term derivatives with the arm means in the
//! variance term held fixed. For that term the chain-rule correction through
//! the mean is `−(2λ/n_arm²) Σ_{j∈arm} (ŷ_j − ȳ̂_arm)`, which is zero up to
//! rounding, so frozen and fully chained gradients agree; the two
//! conventions differ only in the diagonal Hessian.

use serde::{Deserialize, Serialize};

use crate::error::{CbdtError, Result};
use crate::gbdt::GradHess;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompositeLossParams {
    /// Intra-group variance weight.
    pub lambda: f64,
    /// Global calibration weight.
    pub gamma: f64,
    /// ATE calibration weight.
    pub alpha: f64,
    /// Reference ATE the α term pulls towards.
    pub tau_ref: f64,
    /// Use exact second derivatives (and the explicit chain-rule correction)
    /// instead of the frozen-statistics approximation.
    pub exact_chain_gradients: bool,
}

impl Default for CompositeLossParams {
    fn default() -> Self {
        CompositeLossParams {
            lambda: 1.0,
            gamma: 0.1,
            alpha: 1.0,
            tau_ref: 0.0,
            exact_chain_gradients: false,
        }
    }
}

impl CompositeLossParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("gamma", self.gamma), ("alpha", self.alpha)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CbdtError::validation(format!("loss.{name} must be finite and >= 0, got {v}")));
            }
        }
        if !self.tau_ref.is_finite() {
            return Err(CbdtError::validation("loss.tau_ref must be finite"));
        }
        Ok(())
    }
}

/// Arm and overall means of the predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub mean_t: f64,
    pub mean_c: f64,
    pub mean_all: f64,
    pub n_t: usize,
    pub n_c: usize,
    pub ate_hat: f64,
}

pub fn group_stats(yhat: &[f64], treatment: &[u8]) -> Result<GroupStats> {
    if yhat.len() != treatment.len() {
        return Err(CbdtError::validation(format!(
            "{} predictions for {} treatment flags",
            yhat.len(),
            treatment.len()
        )));
    }
    let (mut st, mut sc, mut nt, mut nc) = (0.0, 0.0, 0usize, 0usize);
    for (v, t) in yhat.iter().zip(treatment) {
        if *t == 1 {
            st += v;
            nt += 1;
        } else {
            sc += v;
            nc += 1;
        }
    }
    if nt == 0 || nc == 0 {
        return Err(CbdtError::validation(format!(
            "group statistics need both arms (treated {nt}, control {nc})"
        )));
    }
    let mean_t = st / nt as f64;
    let mean_c = sc / nc as f64;
    Ok(GroupStats {
        mean_t,
        mean_c,
        mean_all: yhat.iter().sum::<f64>() / yhat.len() as f64,
        n_t: nt,
        n_c: nc,
        ate_hat: mean_t - mean_c,
    })
}

/// One additive component of the composite loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossTerm {
    Mse,
    IntraGroupVariance,
    GlobalCalibration,
    AteCalibration,
}

impl LossTerm {
    pub const ALL: [LossTerm; 4] = [
        LossTerm::Mse,
        LossTerm::IntraGroupVariance,
        LossTerm::GlobalCalibration,
        LossTerm::AteCalibration,
    ];
}

fn check_lengths(yhat: &[f64], y: &[f64], treatment: &[u8]) -> Result<()> {
    if yhat.len() != y.len() || y.len() != treatment.len() {
        return Err(CbdtError::validation(format!(
            "length mismatch: {} predictions, {} outcomes, {} treatment flags",
            yhat.len(),
            y.len(),
            treatment.len()
        )));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Value of a single weighted term.
pub fn term_value(
    term: LossTerm,
    yhat: &[f64],
    y: &[f64],
    treatment: &[u8],
    params: &CompositeLossParams,
) -> Result<f64> {
    check_lengths(yhat, y, treatment)?;
    let s = group_stats(yhat, treatment)?;
    Ok(match term {
        LossTerm::Mse => yhat.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum(),
        LossTerm::IntraGroupVariance => {
            let (mut vt, mut vc) = (0.0, 0.0);
            for (p, t) in yhat.iter().zip(treatment) {
                if *t == 1 {
                    vt += (p - s.mean_t) * (p - s.mean_t);
                } else {
                    vc += (p - s.mean_c) * (p - s.mean_c);
                }
            }
            params.lambda * (vt / s.n_t as f64 + vc / s.n_c as f64)
        }
        LossTerm::GlobalCalibration => {
            let d = s.mean_all - mean(y);
            params.gamma * d * d
        }
        LossTerm::AteCalibration => {
            let d = s.ate_hat - params.tau_ref;
            params.alpha * d * d
        }
    })
}

pub fn loss_value(yhat: &[f64], y: &[f64], treatment: &[u8], params: &CompositeLossParams) -> Result<f64> {
    let mut total = 0.0;
    for term in LossTerm::ALL {
        total += term_value(term, yhat, y, treatment, params)?;
    }
    Ok(total)
}

/// Per-sample gradient and Hessian of one weighted term.
pub fn term_grad_hess(
    term: LossTerm,
    yhat: &[f64],
    y: &[f64],
    treatment: &[u8],
    params: &CompositeLossParams,
) -> Result<GradHess> {
    check_lengths(yhat, y, treatment)?;
    let s = group_stats(yhat, treatment)?;
    let n = yhat.len() as f64;
    let (nt, nc) = (s.n_t as f64, s.n_c as f64);
    let exact = params.exact_chain_gradients;
    let mut gh = GradHess::zeros(yhat.len());
    match term {
        LossTerm::Mse => {
            for i in 0..yhat.len() {
                gh.g[i] = 2.0 * (yhat[i] - y[i]);
                gh.h[i] = 2.0;
            }
        }
        LossTerm::IntraGroupVariance => {
            let lambda = params.lambda;
            let (mut dev_t, mut dev_c) = (0.0, 0.0);
            if exact {
                for (p, t) in yhat.iter().zip(treatment) {
                    if *t == 1 {
                        dev_t += p - s.mean_t;
                    } else {
                        dev_c += p - s.mean_c;
                    }
                }
            }
            for i in 0..yhat.len() {
                let (m, n_arm, dev) = if treatment[i] == 1 {
                    (s.mean_t, nt, dev_t)
                } else {
                    (s.mean_c, nc, dev_c)
                };
                gh.g[i] = 2.0 * lambda / n_arm * (yhat[i] - m);
                gh.h[i] = 2.0 * lambda / n_arm;
                if exact {
                    gh.g[i] -= 2.0 * lambda / (n_arm * n_arm) * dev;
                    gh.h[i] = 2.0 * lambda / n_arm * (1.0 - 1.0 / n_arm);
                }
            }
        }
        LossTerm::GlobalCalibration => {
            let g = 2.0 * params.gamma / n * (s.mean_all - mean(y));
            let h = if exact {
                2.0 * params.gamma / (n * n)
            } else {
                2.0 * params.gamma / n
            };
            gh.g.iter_mut().for_each(|v| *v = g);
            gh.h.iter_mut().for_each(|v| *v = h);
        }
        LossTerm::AteCalibration => {
            let alpha = params.alpha;
            let delta = s.ate_hat - params.tau_ref;
            let h_shared = 2.0 * alpha / (nt * nt) + 2.0 * alpha / (nc * nc);
            for i in 0..yhat.len() {
                if treatment[i] == 1 {
                    gh.g[i] = 2.0 * alpha / nt * delta;
                    gh.h[i] = if exact { 2.0 * alpha / (nt * nt) } else { h_shared };
                } else {
                    gh.g[i] = -2.0 * alpha / nc * delta;
                    gh.h[i] = if exact { 2.0 * alpha / (nc * nc) } else { h_shared };
                }
            }
        }
    }
    Ok(gh)
}

fn accumulate(terms: &[LossTerm], yhat: &[f64], y: &[f64], treatment: &[u8], params: &CompositeLossParams) -> Result<GradHess> {
    let mut total = GradHess::zeros(yhat.len());
    for term in terms {
        let gh = term_grad_hess(*term, yhat, y, treatment, params)?;
        for i in 0..yhat.len() {
            total.g[i] += gh.g[i];
            total.h[i] += gh.h[i];
        }
    }
    Ok(total)
}

/// Gradient and Hessian of the full composite loss.
pub fn loss_grad_hess(yhat: &[f64], y: &[f64], treatment: &[u8], params: &CompositeLossParams) -> Result<GradHess> {
    accumulate(&LossTerm::ALL, yhat, y, treatment, params)
}

/// Gradient and Hessian of the three regularizers only (no squared error).
pub fn regularizer_grad_hess(
    yhat: &[f64],
    y: &[f64],
    treatment: &[u8],
    params: &CompositeLossParams,
) -> Result<GradHess> {
    accumulate(
        &[LossTerm::IntraGroupVariance, LossTerm::GlobalCalibration, LossTerm::AteCalibration],
        yhat,
        y,
        treatment,
        params,
    )
}

/// Population variance of the squared-error gradients `2(ŷ_i − y_i)`.
pub fn mse_gradient_variance(yhat: &[f64], y: &[f64]) -> Result<f64> {
    if yhat.len() != y.len() {
        return Err(CbdtError::validation(format!("{} predictions for {} outcomes", yhat.len(), y.len())));
    }
    if yhat.is_empty() {
        return Err(CbdtError::validation("gradient variance of an empty vector"));
    }
    let n = yhat.len() as f64;
    let mu = 2.0 / n * yhat.iter().zip(y).map(|(p, t)| p - t).sum::<f64>();
    Ok(yhat
        .iter()
        .zip(y)
        .map(|(p, t)| {
            let d = 2.0 * (p - t) - mu;
            d * d
        })
        .sum::<f64>()
        / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(lambda: f64, gamma: f64, alpha: f64, tau_ref: f64) -> CompositeLossParams {
        CompositeLossParams {
            lambda,
            gamma,
            alpha,
            tau_ref,
            exact_chain_gradients: false,
        }
    }

    #[test]
    fn group_stats_examples() {
        let s = group_stats(&[1.0, 3.0], &[1, 0]).unwrap();
        assert_eq!((s.mean_t, s.mean_c, s.ate_hat), (1.0, 3.0, -2.0));
        let s = group_stats(&[2.0, 4.0, 6.0, 8.0], &[1, 1, 0, 0]).unwrap();
        assert_eq!((s.mean_t, s.mean_c, s.ate_hat), (3.0, 7.0, -4.0));
        assert_eq!(s.n_t + s.n_c, 4);
        let s = group_stats(&[5.0; 6], &[1, 0, 1, 0, 1, 0]).unwrap();
        assert_eq!(s.ate_hat, 0.0);
        assert!(group_stats(&[1.0, 2.0], &[1, 1]).is_err());
    }

    #[test]
    fn loss_examples() {
        let y = [0.3, -1.0, 2.0, 4.0];
        let w = [1, 0, 1, 0];
        assert_eq!(loss_value(&y, &y, &w, &params(0.0, 0.0, 0.0, 0.0)).unwrap(), 0.0);
        // hand evaluation: MSE 1 + variance 0 + global 0.25 + ATE 1
        let v = loss_value(&[1.0, 0.0], &[0.0, 0.0], &[1, 0], &params(1.0, 1.0, 1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(v, 2.25, epsilon = 1e-15);
    }

    #[test]
    fn all_terms_vanish_together() {
        // per-arm constant predictions equal to y, ATE equal to tau_ref
        let y = [1.0, 1.0, 3.0, 3.0];
        let w = [0, 0, 1, 1];
        let v = loss_value(&y, &y, &w, &params(2.0, 3.0, 4.0, 2.0)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(loss_value(&[1.0], &[1.0, 2.0], &[1, 0], &params(1.0, 1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn gradient_at_optimum() {
        let y = [0.5, 1.5, -2.0];
        let gh = loss_grad_hess(&y, &y, &[1, 0, 0], &params(0.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(gh.g.iter().all(|g| *g == 0.0));
        assert!(gh.h.iter().all(|h| *h == 2.0));
    }

    #[test]
    fn stationary_regularizers_leave_mse_gradient() {
        // arm-constant predictions, τ̂ = τ_ref, mean ŷ = mean y
        let yhat = [1.0, 1.0, 3.0, 3.0];
        let y = [0.0, 2.0, 2.5, 3.5];
        let w = [0, 0, 1, 1];
        let gh = loss_grad_hess(&yhat, &y, &w, &params(1.0, 1.0, 1.0, 2.0)).unwrap();
        for i in 0..4 {
            assert_eq!(gh.g[i], 2.0 * (yhat[i] - y[i]));
        }
    }

    #[test]
    fn hessian_formula() {
        let yhat = [0.1, 0.2, 0.3, 0.4, 0.5];
        let w = [1, 1, 0, 0, 0];
        let p = params(1.5, 0.5, 2.0, 0.0);
        let gh = loss_grad_hess(&yhat, &yhat, &w, &p).unwrap();
        let h_ate = 2.0 * 2.0 / 4.0 + 2.0 * 2.0 / 9.0;
        assert_abs_diff_eq!(gh.h[0], 2.0 + 3.0 / 2.0 + 1.0 / 5.0 + h_ate, epsilon = 1e-14);
        assert_abs_diff_eq!(gh.h[4], 2.0 + 3.0 / 3.0 + 1.0 / 5.0 + h_ate, epsilon = 1e-14);
    }

    #[test]
    fn gradient_variance_examples() {
        assert_eq!(mse_gradient_variance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse_gradient_variance(&[1.5, 2.5, 0.5], &[1.0, 2.0, 0.0]).unwrap(), 0.0);
        assert_eq!(mse_gradient_variance(&[0.0, 1.0], &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn singleton_arm_variance_is_zero() {
        let v = term_value(
            LossTerm::IntraGroupVariance,
            &[5.0, 1.0, 2.0],
            &[0.0; 3],
            &[1, 0, 0],
            &params(1.0, 0.0, 0.0, 0.0),
        )
        .unwrap();
        // only the control arm contributes: ((-0.5)^2 + 0.5^2) / 2
        assert_abs_diff_eq!(v, 0.25, epsilon = 1e-15);
    }
}
