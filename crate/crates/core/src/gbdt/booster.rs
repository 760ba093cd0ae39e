use serde::{Deserialize, Serialize};

use crate::error::{CbdtError, Result};
use crate::gbdt::{fit_tree_binned, BinnedMatrix, GradHess, RegressionTree, TreeParams};
use crate::matrix::Matrix;

/// Loss for plain boosting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `Σ (ŷ − y)²`: gradient `2(ŷ − y)`, hessian `2`.
    SquaredError,
    /// Binary log-loss on the logit scale; targets in `[0, 1]`.
    Logistic,
}

impl Objective {
    fn base_score(self, y: &[f64]) -> f64 {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        match self {
            Objective::SquaredError => mean,
            Objective::Logistic => {
                let p = mean.clamp(1e-6, 1.0 - 1e-6);
                (p / (1.0 - p)).ln()
            }
        }
    }

    fn grad_hess(self, raw: &[f64], y: &[f64], gh: &mut GradHess) {
        match self {
            Objective::SquaredError => {
                for i in 0..raw.len() {
                    gh.g[i] = 2.0 * (raw[i] - y[i]);
                    gh.h[i] = 2.0;
                }
            }
            Objective::Logistic => {
                for i in 0..raw.len() {
                    let p = sigmoid(raw[i]);
                    gh.g[i] = p - y[i];
                    gh.h[i] = (p * (1.0 - p)).max(1e-16);
                }
            }
        }
    }

    pub fn transform(self, raw: f64) -> f64 {
        match self {
            Objective::SquaredError => raw,
            Objective::Logistic => sigmoid(raw),
        }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub tree: TreeParams,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            rounds: 100,
            learning_rate: 0.1,
            tree: TreeParams::default(),
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(CbdtError::validation(format!(
                "learning_rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        self.tree.validate()
    }
}

/// Additive tree ensemble `base + ν Σ tree(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub objective: Objective,
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
    pub n_features: usize,
}

impl GbdtModel {
    /// Model with no trees, predicting `base_score` everywhere.
    pub fn constant(objective: Objective, base_score: f64, n_features: usize) -> Self {
        GbdtModel {
            objective,
            base_score,
            learning_rate: 1.0,
            trees: Vec::new(),
            n_features,
        }
    }

    pub fn predict_raw(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features {
            return Err(CbdtError::validation(format!(
                "model expects {} features, got {}",
                self.n_features,
                x.cols()
            )));
        }
        let mut out = vec![self.base_score; x.rows()];
        for tree in &self.trees {
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.learning_rate * tree.predict_row(x.row(i));
            }
        }
        Ok(out)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        let mut raw = self.predict_raw(x)?;
        raw.iter_mut().for_each(|v| *v = self.objective.transform(*v));
        Ok(raw)
    }
}

/// Plain second-order gradient boosting.
pub fn fit_gbdt(x: &Matrix, y: &[f64], params: &GbdtParams, objective: Objective) -> Result<GbdtModel> {
    params.validate()?;
    if y.len() != x.rows() {
        return Err(CbdtError::validation(format!("{} targets for {} rows", y.len(), x.rows())));
    }
    if y.is_empty() {
        return Err(CbdtError::validation("cannot fit on zero rows"));
    }
    let base = objective.base_score(y);
    let binned = BinnedMatrix::new(x, &params.tree);
    let mut raw = vec![base; y.len()];
    let mut gh = GradHess::zeros(y.len());
    let mut trees = Vec::with_capacity(params.rounds);
    for _ in 0..params.rounds {
        objective.grad_hess(&raw, y, &mut gh);
        let fitted = fit_tree_binned(&binned, &gh, &params.tree)?;
        for (r, w) in raw.iter_mut().zip(fitted.train_predictions()) {
            *r += params.learning_rate * w;
        }
        trees.push(fitted.tree);
    }
    Ok(GbdtModel {
        objective,
        base_score: base,
        learning_rate: params.learning_rate,
        trees,
        n_features: x.cols(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_target_is_reproduced() {
        let x = Matrix::from_columns(&[(0..30).map(|i| i as f64).collect()]).unwrap();
        let m = fit_gbdt(&x, &[4.2; 30], &GbdtParams::default(), Objective::SquaredError).unwrap();
        for p in m.predict(&x).unwrap() {
            assert!((p - 4.2).abs() < 1e-12);
        }
    }

    #[test]
    fn squared_error_reduces_training_loss() {
        let n = 200;
        let x = Matrix::from_columns(&[(0..n).map(|i| i as f64 / 20.0).collect()]).unwrap();
        let y: Vec<f64> = (0..n).map(|i| (i as f64 / 20.0).sin()).collect();
        let m = fit_gbdt(&x, &y, &GbdtParams::default(), Objective::SquaredError).unwrap();
        let mse: f64 = m.predict(&x).unwrap().iter().zip(&y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n as f64;
        assert!(mse < 0.01, "{mse}");
    }

    #[test]
    fn logistic_outputs_are_probabilities() {
        let n = 200;
        let x = Matrix::from_columns(&[(0..n).map(|i| i as f64).collect()]).unwrap();
        let y: Vec<f64> = (0..n).map(|i| if i % 3 == 0 || i > 150 { 1.0 } else { 0.0 }).collect();
        let m = fit_gbdt(&x, &y, &GbdtParams::default(), Objective::Logistic).unwrap();
        let p = m.predict(&x).unwrap();
        assert!(p.iter().all(|v| *v > 0.0 && *v < 1.0));
        assert!(p[190] > 0.8 && p[10] < 0.5);
    }
}
