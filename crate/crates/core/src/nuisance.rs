//! Cross-fitted outcome and propensity models.
//!
//! Rows are split into two folds stratified by arm. Models trained on one
//! fold score the other, so every training row gets predictions from models
//! that never saw it.

use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_partition, CausalDataset};
use crate::error::{CbdtError, Result};
use crate::gbdt::{fit_gbdt, GbdtModel, GbdtParams, Objective};
use crate::matrix::Matrix;

/// Propensity predictions are clipped to `[PROPENSITY_CLIP, 1 − PROPENSITY_CLIP]`.
pub const PROPENSITY_CLIP: f64 = 0.01;

/// Per-row nuisance predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct NuisanceEstimates {
    /// `E[Y | x]`
    pub m_hat: Vec<f64>,
    /// `P(T = 1 | x)`, clipped.
    pub e_hat: Vec<f64>,
    /// `E[Y | x, T = 0]`
    pub mu0_hat: Vec<f64>,
    /// `E[Y | x, T = 1]`
    pub mu1_hat: Vec<f64>,
}

impl NuisanceEstimates {
    fn zeros(n: usize) -> Self {
        NuisanceEstimates {
            m_hat: vec![0.0; n],
            e_hat: vec![0.0; n],
            mu0_hat: vec![0.0; n],
            mu1_hat: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.m_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m_hat.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NuisanceFold {
    /// Rows this fold's models were *not* trained on.
    pub held_out: Vec<usize>,
    pub outcome: GbdtModel,
    pub propensity: GbdtModel,
    pub control_outcome: GbdtModel,
    pub treated_outcome: GbdtModel,
}

#[derive(Debug, Clone)]
pub struct NuisanceModels {
    pub folds: Vec<NuisanceFold>,
    /// Out-of-fold predictions for the rows the models were fitted on.
    pub cross_fitted: NuisanceEstimates,
}

impl NuisanceModels {
    /// Predictions for new rows: the average over fold models.
    pub fn predict(&self, x: &Matrix) -> Result<NuisanceEstimates> {
        let mut out = NuisanceEstimates::zeros(x.rows());
        let k = self.folds.len() as f64;
        for fold in &self.folds {
            let parts = [
                (&fold.outcome, &mut out.m_hat),
                (&fold.propensity, &mut out.e_hat),
                (&fold.control_outcome, &mut out.mu0_hat),
                (&fold.treated_outcome, &mut out.mu1_hat),
            ];
            for (model, acc) in parts {
                for (a, p) in acc.iter_mut().zip(model.predict(x)?) {
                    *a += p / k;
                }
            }
        }
        out.e_hat.iter_mut().for_each(|e| *e = clip_propensity(*e));
        Ok(out)
    }
}

pub fn clip_propensity(e: f64) -> f64 {
    e.clamp(PROPENSITY_CLIP, 1.0 - PROPENSITY_CLIP)
}

fn fit_arm(x: &Matrix, y: &[f64], rows: &[usize], arm: &str, params: &GbdtParams) -> Result<GbdtModel> {
    let need = 2 * params.tree.min_samples_leaf;
    if rows.len() < need {
        return Err(CbdtError::validation(format!(
            "{arm} arm has {} rows in a cross-fitting fold; its outcome model needs at least {need}",
            rows.len()
        )));
    }
    let y_arm: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    fit_gbdt(&x.select_rows(rows), &y_arm, params, Objective::SquaredError)
}

/// Two-fold cross-fitted nuisance models.
pub fn fit_nuisance(ds: &CausalDataset, params: &GbdtParams, seed: u64) -> Result<NuisanceModels> {
    params.validate()?;
    if ds.n() < 20 {
        return Err(CbdtError::validation(format!(
            "cross-fitting needs at least 20 rows, got {}",
            ds.n()
        )));
    }
    let (a, b) = stratified_partition(ds.treatment(), 0.5, seed)?;
    let x = ds.features();
    let t = ds.treatment_f64();
    let y = ds.outcome();
    let mut est = NuisanceEstimates::zeros(ds.n());
    let mut folds = Vec::with_capacity(2);
    for (train, held) in [(a.clone(), b.clone()), (b, a)] {
        let x_train = x.select_rows(&train);
        let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let t_train: Vec<f64> = train.iter().map(|&i| t[i]).collect();
        let controls: Vec<usize> = train.iter().copied().filter(|&i| ds.treatment()[i] == 0).collect();
        let treated: Vec<usize> = train.iter().copied().filter(|&i| ds.treatment()[i] == 1).collect();
        let fold = NuisanceFold {
            outcome: fit_gbdt(&x_train, &y_train, params, Objective::SquaredError)?,
            propensity: fit_gbdt(&x_train, &t_train, params, Objective::Logistic)?,
            control_outcome: fit_arm(x, y, &controls, "control", params)?,
            treated_outcome: fit_arm(x, y, &treated, "treated", params)?,
            held_out: held,
        };
        let x_held = x.select_rows(&fold.held_out);
        let m = fold.outcome.predict(&x_held)?;
        let e = fold.propensity.predict(&x_held)?;
        let mu0 = fold.control_outcome.predict(&x_held)?;
        let mu1 = fold.treated_outcome.predict(&x_held)?;
        for (j, &i) in fold.held_out.iter().enumerate() {
            est.m_hat[i] = m[j];
            est.e_hat[i] = clip_propensity(e[j]);
            est.mu0_hat[i] = mu0[j];
            est.mu1_hat[i] = mu1[j];
        }
        folds.push(fold);
    }
    Ok(NuisanceModels {
        folds,
        cross_fitted: est,
    })
}

/// AIPW scores `μ̂1 − μ̂0 + t(y − μ̂1)/ê − (1 − t)(y − μ̂0)/(1 − ê)`.
///
/// Their mean is the doubly robust ATE estimate; regressing them on `x`
/// gives the DR-learner.
pub fn aipw_scores(treatment: &[u8], outcome: &[f64], est: &NuisanceEstimates) -> Result<Vec<f64>> {
    if treatment.len() != est.len() || outcome.len() != est.len() {
        return Err(CbdtError::validation(format!(
            "{} rows but {} nuisance predictions",
            outcome.len(),
            est.len()
        )));
    }
    (0..est.len())
        .map(|i| {
            let e = est.e_hat[i];
            if !(e > 0.0 && e < 1.0) {
                return Err(CbdtError::numerical(format!("propensity {e} at row {i} is outside (0, 1)")));
            }
            let (y, mu0, mu1) = (outcome[i], est.mu0_hat[i], est.mu1_hat[i]);
            let correction = if treatment[i] == 1 {
                (y - mu1) / e
            } else {
                -(y - mu0) / (1.0 - e)
            };
            Ok(mu1 - mu0 + correction)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticSpec};

    fn small() -> GbdtParams {
        GbdtParams {
            rounds: 30,
            ..Default::default()
        }
    }

    #[test]
    fn constant_outcome_gives_constant_m_hat() {
        let spec = SyntheticSpec {
            n: 200,
            d: 3,
            ..Default::default()
        };
        let ds = generate_synthetic(&spec).unwrap();
        let flat = CausalDataset::new(
            ds.features().clone(),
            ds.treatment().to_vec(),
            vec![3.5; ds.n()],
            ds.feature_names().to_vec(),
        )
        .unwrap();
        let nm = fit_nuisance(&flat, &small(), 1).unwrap();
        assert!(nm.cross_fitted.m_hat.iter().all(|m| (m - 3.5).abs() < 1e-6));
    }

    #[test]
    fn propensities_are_clipped_and_balanced() {
        let spec = SyntheticSpec {
            n: 2000,
            d: 4,
            confounding: 0.0,
            seed: 3,
            ..Default::default()
        };
        let ds = generate_synthetic(&spec).unwrap();
        let nm = fit_nuisance(&ds, &small(), 5).unwrap();
        let e = &nm.cross_fitted.e_hat;
        assert!(e.iter().all(|v| *v >= PROPENSITY_CLIP && *v <= 1.0 - PROPENSITY_CLIP));
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        assert!((0.45..=0.55).contains(&mean), "{mean}");
    }

    #[test]
    fn too_small_is_rejected() {
        let spec = SyntheticSpec {
            n: 19,
            d: 2,
            ..Default::default()
        };
        let ds = generate_synthetic(&spec).unwrap();
        assert!(fit_nuisance(&ds, &small(), 0).is_err());
    }
}
