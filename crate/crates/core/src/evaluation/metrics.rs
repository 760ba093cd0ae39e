use serde::{Deserialize, Serialize};

use crate::error::{CbdtError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pehe {
    /// Mean squared deviation between estimated and true effects.
    pub sq: f64,
    /// Its square root, the scale usually quoted for IHDP.
    pub sqrt: f64,
}

pub fn pehe(tau_hat: &[f64], tau_true: &[f64]) -> Result<Pehe> {
    if tau_hat.len() != tau_true.len() {
        return Err(CbdtError::validation(format!(
            "{} estimates for {} true effects",
            tau_hat.len(),
            tau_true.len()
        )));
    }
    if tau_hat.is_empty() {
        return Err(CbdtError::validation("PEHE of an empty vector"));
    }
    let sq = tau_hat
        .iter()
        .zip(tau_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / tau_hat.len() as f64;
    Ok(Pehe { sq, sqrt: sq.sqrt() })
}

pub fn ate_error(tau_hat_ate: f64, tau_true_ate: f64) -> f64 {
    (tau_hat_ate - tau_true_ate).abs()
}

pub fn rmse(pred: &[f64], target: &[f64]) -> Result<f64> {
    pehe(pred, target).map(|p| p.sqrt)
}

/// Efficiency-adjusted PEHE: `pehe / −log10(train_s · infer_ms / 1000)`.
///
/// Only defined when the time product lies in `(0, 1)`.
pub fn eap(pehe: f64, train_time_s: f64, infer_time_ms: f64) -> Result<f64> {
    let product = train_time_s * infer_time_ms / 1000.0;
    if !(product > 0.0 && product < 1.0) || !pehe.is_finite() {
        return Err(CbdtError::numerical(format!(
            "EAP is undefined: train time {train_time_s} s × inference time {infer_time_ms} ms / 1000 = {product}, \
             which must lie strictly between 0 and 1 for −log10 to be a positive denominator"
        )));
    }
    Ok(pehe / -product.log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pehe_examples() {
        assert_eq!(pehe(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), Pehe { sq: 0.0, sqrt: 0.0 });
        let p = pehe(&[1.3, -0.7, 2.3], &[1.0, -1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(p.sqrt, 0.3, epsilon = 1e-12);
        let p = pehe(&[1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(p.sq, 2.5);
        assert_abs_diff_eq!(p.sqrt, 1.581_138_830_084_19, epsilon = 1e-12);
        assert!(pehe(&[1.0], &[]).is_err());
    }

    #[test]
    fn ate_error_examples() {
        assert_eq!(ate_error(2.5, 2.0), 0.5);
        assert_eq!(ate_error(1.0, 1.0), 0.0);
    }

    #[test]
    fn eap_examples() {
        assert!((eap(0.5504, 0.33, 1.8).unwrap() - 0.1707).abs() <= 5e-4);
        assert!((eap(0.6695, 0.9686, 12.8).unwrap() - 0.3509).abs() <= 1e-3);
        assert_eq!(eap(0.0, 0.5, 2.0).unwrap(), 0.0);
        assert!(eap(0.5, 100.0, 20.0).is_err());
        assert!(eap(0.5, 0.0, 20.0).is_err());
    }
}
