//! Causal datasets: covariates, binary treatment, observed outcome, and (for
//! simulated data) the noiseless potential outcome surfaces.

mod io;
mod preprocess;
mod synthetic;

pub use io::{load_csv, load_ihdp_csv, read_raw_csv, write_csv, IHDP_COVARIATES};
pub use preprocess::{
    preprocess, Imputation, PreprocessReport, PreprocessSpec, RawColumn, RawTable, RawValues,
};
pub(crate) use preprocess::quantile_sorted;
pub use synthetic::{generate_ihdp_surrogate, generate_synthetic, EffectShape, SyntheticSpec};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CbdtError, Result};
use crate::matrix::Matrix;

/// Observational or simulated data for effect estimation.
///
/// Construction validates the invariants: binary treatment with both arms
/// present, finite values everywhere, and matching lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalDataset {
    features: Matrix,
    treatment: Vec<u8>,
    outcome: Vec<f64>,
    mu0: Option<Vec<f64>>,
    mu1: Option<Vec<f64>>,
    y_cf: Option<Vec<f64>>,
    feature_names: Vec<String>,
}

impl CausalDataset {
    pub fn new(
        features: Matrix,
        treatment: Vec<u8>,
        outcome: Vec<f64>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let ds = CausalDataset {
            features,
            treatment,
            outcome,
            mu0: None,
            mu1: None,
            y_cf: None,
            feature_names,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Attach the noiseless potential outcome surfaces.
    pub fn with_potential_outcomes(mut self, mu0: Vec<f64>, mu1: Vec<f64>) -> Result<Self> {
        self.mu0 = Some(mu0);
        self.mu1 = Some(mu1);
        self.validate()?;
        Ok(self)
    }

    pub fn with_counterfactual(mut self, y_cf: Vec<f64>) -> Result<Self> {
        self.y_cf = Some(y_cf);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let n = self.features.rows();
        if self.treatment.len() != n || self.outcome.len() != n {
            return Err(CbdtError::validation(format!(
                "features have {n} rows but treatment has {} and outcome has {}",
                self.treatment.len(),
                self.outcome.len()
            )));
        }
        if self.feature_names.len() != self.features.cols() {
            return Err(CbdtError::validation(format!(
                "{} feature names for {} columns",
                self.feature_names.len(),
                self.features.cols()
            )));
        }
        if let Some(i) = self.treatment.iter().position(|&t| t > 1) {
            return Err(CbdtError::validation(format!(
                "row {i}: treatment must be 0 or 1, got {}",
                self.treatment[i]
            )));
        }
        let n_t = self.treatment.iter().filter(|&&t| t == 1).count();
        if n_t == 0 || n_t == n {
            return Err(CbdtError::validation(format!(
                "both treatment arms must be non-empty (treated {n_t}, control {})",
                n - n_t
            )));
        }
        if !self.features.is_finite() {
            return Err(CbdtError::validation("features contain non-finite values"));
        }
        if let Some(i) = self.outcome.iter().position(|v| !v.is_finite()) {
            return Err(CbdtError::validation(format!("row {i}: outcome is not finite")));
        }
        for (name, col) in [("mu0", &self.mu0), ("mu1", &self.mu1), ("y_cfactual", &self.y_cf)] {
            if let Some(c) = col {
                if c.len() != n {
                    return Err(CbdtError::validation(format!(
                        "{name} has {} values, expected {n}",
                        c.len()
                    )));
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(CbdtError::validation(format!("{name} contains non-finite values")));
                }
            }
        }
        if self.mu0.is_some() != self.mu1.is_some() {
            return Err(CbdtError::validation("mu0 and mu1 must be given together"));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn d(&self) -> usize {
        self.features.cols()
    }

    pub fn n_treated(&self) -> usize {
        self.treatment.iter().filter(|&&t| t == 1).count()
    }

    pub fn n_control(&self) -> usize {
        self.n() - self.n_treated()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn treatment(&self) -> &[u8] {
        &self.treatment
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn mu0(&self) -> Option<&[f64]> {
        self.mu0.as_deref()
    }

    pub fn mu1(&self) -> Option<&[f64]> {
        self.mu1.as_deref()
    }

    pub fn y_cf(&self) -> Option<&[f64]> {
        self.y_cf.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Treatment as 0.0 / 1.0.
    pub fn treatment_f64(&self) -> Vec<f64> {
        self.treatment.iter().map(|&t| f64::from(t)).collect()
    }

    /// True CATE `mu1 - mu0`, when the potential outcome surfaces are known.
    pub fn true_cate(&self) -> Option<Vec<f64>> {
        match (&self.mu0, &self.mu1) {
            (Some(m0), Some(m1)) => Some(m1.iter().zip(m0).map(|(a, b)| a - b).collect()),
            _ => None,
        }
    }

    pub fn true_ate(&self) -> Option<f64> {
        self.true_cate().map(|c| c.iter().sum::<f64>() / c.len() as f64)
    }

    /// Row indices of one arm, ascending.
    pub fn arm_indices(&self, treated: bool) -> Vec<usize> {
        let want = u8::from(treated);
        (0..self.n()).filter(|&i| self.treatment[i] == want).collect()
    }

    /// Subset of rows (indices may repeat, as in bootstrap resampling).
    pub fn subset(&self, indices: &[usize]) -> Result<CausalDataset> {
        let pick = |v: &Vec<f64>| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let ds = CausalDataset {
            features: self.features.select_rows(indices),
            treatment: indices.iter().map(|&i| self.treatment[i]).collect(),
            outcome: pick(&self.outcome),
            mu0: self.mu0.as_ref().map(pick),
            mu1: self.mu1.as_ref().map(pick),
            y_cf: self.y_cf.as_ref().map(pick),
            feature_names: self.feature_names.clone(),
        };
        ds.validate()?;
        Ok(ds)
    }
}

/// Stratified train/test split: each arm is shuffled with the seed and its
/// first `round(fraction * n_arm)` rows go to the training part.
///
/// Both parts keep the original row order.
pub fn split_train_test(
    ds: &CausalDataset,
    fraction: f64,
    seed: u64,
) -> Result<(CausalDataset, CausalDataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CbdtError::validation(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let (train, test) = stratified_partition(ds.treatment(), fraction, seed)?;
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}

/// Index form of [`split_train_test`]; also used for cross-fitting folds.
pub fn stratified_partition(
    treatment: &[u8],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for arm in [1u8, 0u8] {
        let mut idx: Vec<usize> = (0..treatment.len()).filter(|&i| treatment[i] == arm).collect();
        let n_arm = idx.len();
        let n_train = (fraction * n_arm as f64).round() as usize;
        if n_train == 0 || n_train >= n_arm {
            let name = if arm == 1 { "treated" } else { "control" };
            return Err(CbdtError::validation(format!(
                "splitting the {name} arm ({n_arm} rows) at fraction {fraction} leaves one side empty"
            )));
        }
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n_t: usize, n_c: usize) -> CausalDataset {
        let n = n_t + n_c;
        let x = Matrix::new(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        let mut t = vec![1u8; n_t];
        t.extend(vec![0u8; n_c]);
        CausalDataset::new(x, t, vec![0.0; n], vec!["x1".into()]).unwrap()
    }

    #[test]
    fn rejects_non_binary_treatment_with_row() {
        let x = Matrix::zeros(3, 1);
        let err = CausalDataset::new(x, vec![0, 2, 1], vec![0.0; 3], vec!["a".into()]).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn rejects_single_arm() {
        let x = Matrix::zeros(3, 1);
        assert!(CausalDataset::new(x, vec![1, 1, 1], vec![0.0; 3], vec!["a".into()]).is_err());
    }

    #[test]
    fn stratified_split_arithmetic() {
        let ds = toy(50, 50);
        let (train, test) = split_train_test(&ds, 0.8, 7).unwrap();
        assert_eq!(train.n(), 80);
        assert_eq!(train.n_treated(), 40);
        assert_eq!(train.n_control(), 40);
        assert_eq!(test.n(), 20);
    }

    #[test]
    fn split_that_empties_an_arm_fails() {
        let ds = toy(2, 1);
        assert!(split_train_test(&ds, 0.99, 1).is_err());
    }

    #[test]
    fn split_is_deterministic_and_leaves_input_untouched() {
        let ds = toy(30, 20);
        let before = ds.clone();
        let a = split_train_test(&ds, 0.7, 11).unwrap();
        let b = split_train_test(&ds, 0.7, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(ds, before);
        let c = split_train_test(&ds, 0.7, 12).unwrap();
        assert_ne!(a.0, c.0);
    }
}
