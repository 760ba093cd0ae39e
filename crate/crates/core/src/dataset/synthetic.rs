//! Simulated datasets with known potential outcome surfaces.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::CausalDataset;
use crate::error::{CbdtError, Result};
use crate::matrix::Matrix;

/// Shape of the treatment effect surface `tau(x) = mu1(x) - mu0(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EffectShape {
    /// `base_effect + heterogeneity * (0.5 * x0 + sin(pi * x1 / 2))`.
    ///
    /// Both heterogeneity terms are odd functions of standard normal
    /// inputs, so the population ATE is exactly `base_effect`.
    Smooth,
    /// `low` when `x[feature] <= threshold`, `high` otherwise.
    Step {
        feature: usize,
        threshold: f64,
        low: f64,
        high: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub heterogeneity: f64,
    pub confounding: f64,
    pub noise_sigma: f64,
    pub base_effect: f64,
    pub shape: EffectShape,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n: 2000,
            d: 10,
            heterogeneity: 1.0,
            confounding: 1.0,
            noise_sigma: 1.0,
            base_effect: 1.0,
            shape: EffectShape::Smooth,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(CbdtError::validation(format!("synthetic n must be at least 10, got {}", self.n)));
        }
        if self.d < 1 {
            return Err(CbdtError::validation("synthetic d must be at least 1"));
        }
        if !(self.heterogeneity >= 0.0 && self.heterogeneity.is_finite()) {
            return Err(CbdtError::validation("heterogeneity must be finite and >= 0"));
        }
        if !(self.confounding >= 0.0 && self.confounding.is_finite()) {
            return Err(CbdtError::validation("confounding must be finite and >= 0"));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(CbdtError::validation("noise_sigma must be positive"));
        }
        if let EffectShape::Step { feature, .. } = self.shape {
            if feature >= self.d {
                return Err(CbdtError::validation(format!(
                    "step feature {feature} out of range for d = {}",
                    self.d
                )));
            }
        }
        Ok(())
    }

    /// Nearly noiseless step: effect 0 when `x1 <= 0.5`, 2 above.
    pub fn step_preset() -> Self {
        SyntheticSpec {
            n: 4000,
            d: 5,
            noise_sigma: 0.1,
            shape: EffectShape::Step {
                feature: 0,
                threshold: 0.5,
                low: 0.0,
                high: 2.0,
            },
            ..Default::default()
        }
    }

    /// Effect 2 everywhere.
    pub fn constant_preset() -> Self {
        SyntheticSpec {
            n: 5000,
            d: 5,
            heterogeneity: 0.0,
            base_effect: 2.0,
            ..Default::default()
        }
    }

    /// Population ATE implied by the spec.
    pub fn analytic_ate(&self) -> f64 {
        match self.shape {
            EffectShape::Smooth => self.base_effect,
            EffectShape::Step {
                threshold, low, high, ..
            } => {
                let above = 0.5 * statrs::function::erf::erfc(threshold / std::f64::consts::SQRT_2);
                low + (high - low) * above
            }
        }
    }

    pub fn cate(&self, x: &[f64]) -> f64 {
        let at = |j: usize| x[j % x.len()];
        match self.shape {
            EffectShape::Smooth => {
                self.base_effect
                    + self.heterogeneity * (0.5 * at(0) + (std::f64::consts::FRAC_PI_2 * at(1)).sin())
            }
            EffectShape::Step {
                feature,
                threshold,
                low,
                high,
            } => {
                if x[feature] <= threshold {
                    low
                } else {
                    high
                }
            }
        }
    }

    pub fn baseline(&self, x: &[f64]) -> f64 {
        let at = |j: usize| x[j % x.len()];
        1.0 + at(0) + 0.5 * at(1) + 0.5 * (2.0 * at(2)).sin()
    }

    /// Treatment probability, bounded to `[0.05, 0.95]`.
    pub fn propensity(&self, x: &[f64]) -> f64 {
        let at = |j: usize| x[j % x.len()];
        let logit = self.confounding * (0.8 * at(0) - 0.4 * at(2));
        (1.0 / (1.0 + (-logit).exp())).clamp(0.05, 0.95)
    }
}

fn feature_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("x{j}")).collect()
}

/// Draw a dataset from `spec`. Identical specs give bit-identical datasets.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<CausalDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| CbdtError::validation(e.to_string()))?;
    loop {
        let mut data = Vec::with_capacity(spec.n * spec.d);
        for _ in 0..spec.n * spec.d {
            data.push(StandardNormal.sample(&mut rng));
        }
        let features = Matrix::new(spec.n, spec.d, data)?;
        let mut treatment = Vec::with_capacity(spec.n);
        let mut mu0 = Vec::with_capacity(spec.n);
        let mut mu1 = Vec::with_capacity(spec.n);
        let mut outcome = Vec::with_capacity(spec.n);
        let mut y_cf = Vec::with_capacity(spec.n);
        for i in 0..spec.n {
            let x = features.row(i);
            let m0 = spec.baseline(x);
            let m1 = m0 + spec.cate(x);
            let t = rng.random_bool(spec.propensity(x));
            let e_f: f64 = noise.sample(&mut rng);
            let e_cf: f64 = noise.sample(&mut rng);
            let (yf, ycf) = if t { (m1 + e_f, m0 + e_cf) } else { (m0 + e_f, m1 + e_cf) };
            treatment.push(u8::from(t));
            mu0.push(m0);
            mu1.push(m1);
            outcome.push(yf);
            y_cf.push(ycf);
        }
        let n_t = treatment.iter().filter(|&&t| t == 1).count();
        if n_t == 0 || n_t == spec.n {
            // both arms must be present; redraw from the continuing stream
            continue;
        }
        return CausalDataset::new(features, treatment, outcome, feature_names(spec.d))?
            .with_potential_outcomes(mu0, mu1)?
            .with_counterfactual(y_cf);
    }
}

pub const IHDP_N: usize = 747;
const IHDP_CONTINUOUS: usize = 6;
const IHDP_TREATED_TARGET: f64 = 139.0;

/// A simulated stand-in for one public IHDP replicate: 747 rows, 25
/// covariates (6 standardized continuous, 19 binary, in the public column
/// order), about 139 treated, and outcomes from the exponential/linear
/// response surface with an effect on the treated of 4 and unit noise.
///
/// The covariates are simulated to mimic the marginal structure of the
/// public data, not copied from it.
pub fn generate_ihdp_surrogate(replicate: usize) -> Result<CausalDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1D_4D50_0000 + replicate as u64);
    let n = IHDP_N;
    let d = super::IHDP_COVARIATES;

    // continuous block: equicorrelated normals, then standardized
    let mut cont = vec![vec![0.0; n]; IHDP_CONTINUOUS];
    for i in 0..n {
        let shared: f64 = StandardNormal.sample(&mut rng);
        for col in cont.iter_mut() {
            let own: f64 = StandardNormal.sample(&mut rng);
            col[i] = 0.5 * shared + (0.75f64).sqrt() * own;
        }
    }
    for col in cont.iter_mut() {
        let m = col.iter().sum::<f64>() / n as f64;
        let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt();
        col.iter_mut().for_each(|v| *v = (*v - m) / sd);
    }

    // binary block: 8 independent indicators, a 4-level education factor
    // (3 indicators), and an 8-level site factor (8 indicators)
    let independent = [0.51, 0.09, 0.52, 0.35, 0.46, 0.08, 0.03, 0.56];
    let education = [0.38, 0.27, 0.21, 0.14];
    let sites = [0.14, 0.16, 0.15, 0.13, 0.14, 0.10, 0.17, 0.01];
    let edu_dist = WeightedIndex::new(education).expect("static weights");
    let site_dist = WeightedIndex::new(sites).expect("static weights");
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = Vec::with_capacity(d);
        x.extend(cont.iter().map(|c| c[i]));
        for p in independent {
            x.push(f64::from(u8::from(Bernoulli::new(p).expect("static p").sample(&mut rng))));
        }
        let e = edu_dist.sample(&mut rng);
        x.extend((0..3).map(|k| if e == k { 1.0 } else { 0.0 }));
        let s = site_dist.sample(&mut rng);
        x.extend((0..8).map(|k| if s == k { 1.0 } else { 0.0 }));
        debug_assert_eq!(x.len(), d);
        rows.push(x);
    }

    // non-random selection into treatment, calibrated to ~139 treated
    let select = |x: &[f64]| 0.5 * x[0] - 0.3 * x[4] + 0.6 * x[8] - 0.8 * x[14] + 0.4 * x[17];
    let scores: Vec<f64> = rows.iter().map(|x| select(x)).collect();
    let expected = |a: f64| scores.iter().map(|s| 1.0 / (1.0 + (-(a + s)).exp())).sum::<f64>();
    let (mut lo, mut hi) = (-20.0, 20.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if expected(mid) < IHDP_TREATED_TARGET {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let intercept = 0.5 * (lo + hi);

    // response surface coefficients
    let coef_values = [0.0, 0.1, 0.2, 0.3, 0.4];
    let coef_dist = WeightedIndex::new([0.6, 0.1, 0.1, 0.1, 0.1]).expect("static weights");
    let beta: Vec<f64> = (0..d).map(|_| coef_values[coef_dist.sample(&mut rng)]).collect();

    loop {
        let treatment: Vec<u8> = scores
            .iter()
            .map(|s| u8::from(rng.random_bool(1.0 / (1.0 + (-(intercept + s)).exp()))))
            .collect();
        let n_t = treatment.iter().filter(|&&t| t == 1).count();
        if n_t < 2 || n_t > n - 2 {
            continue;
        }
        let lin: Vec<f64> = rows
            .iter()
            .map(|x| x.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let mu0: Vec<f64> = rows
            .iter()
            .map(|x| x.iter().zip(&beta).map(|(a, b)| (a + 0.5) * b).sum::<f64>().exp())
            .collect();
        // offset so that the average effect on the treated is exactly 4
        let att_raw = (0..n)
            .filter(|&i| treatment[i] == 1)
            .map(|i| lin[i] - mu0[i])
            .sum::<f64>()
            / n_t as f64;
        let omega = att_raw - 4.0;
        let mu1: Vec<f64> = lin.iter().map(|l| l - omega).collect();
        let mut outcome = Vec::with_capacity(n);
        let mut y_cf = Vec::with_capacity(n);
        for i in 0..n {
            let e_f: f64 = StandardNormal.sample(&mut rng);
            let e_cf: f64 = StandardNormal.sample(&mut rng);
            if treatment[i] == 1 {
                outcome.push(mu1[i] + e_f);
                y_cf.push(mu0[i] + e_cf);
            } else {
                outcome.push(mu0[i] + e_f);
                y_cf.push(mu1[i] + e_cf);
            }
        }
        let features = Matrix::from_rows(&rows)?;
        return CausalDataset::new(features, treatment, outcome, feature_names(d))?
            .with_potential_outcomes(mu0, mu1)?
            .with_counterfactual(y_cf);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_heterogeneity_gives_constant_effect() {
        let spec = SyntheticSpec {
            n: 200,
            heterogeneity: 0.0,
            base_effect: 2.0,
            ..Default::default()
        };
        let ds = generate_synthetic(&spec).unwrap();
        // mu1 - mu0 differs from 2 only by rounding in (mu0 + 2) - mu0
        assert!(ds.true_cate().unwrap().iter().all(|t| (t - 2.0).abs() < 1e-12));
    }

    #[test]
    fn same_seed_same_data() {
        let spec = SyntheticSpec {
            n: 100,
            seed: 42,
            ..Default::default()
        };
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
        let other = SyntheticSpec { seed: 43, ..spec.clone() };
        assert_ne!(generate_synthetic(&spec).unwrap(), generate_synthetic(&other).unwrap());
    }

    #[test]
    fn invalid_sizes_are_rejected() {
        for spec in [
            SyntheticSpec { n: 9, ..Default::default() },
            SyntheticSpec { d: 0, ..Default::default() },
            SyntheticSpec { noise_sigma: 0.0, ..Default::default() },
        ] {
            assert!(generate_synthetic(&spec).is_err());
        }
    }

    #[test]
    fn empirical_ate_converges_to_analytic() {
        for shape in [
            EffectShape::Smooth,
            EffectShape::Step {
                feature: 0,
                threshold: 0.5,
                low: 0.0,
                high: 3.0,
            },
        ] {
            let spec = SyntheticSpec {
                n: 100_000,
                d: 4,
                shape,
                seed: 5,
                ..Default::default()
            };
            let ds = generate_synthetic(&spec).unwrap();
            let ate = ds.true_ate().unwrap();
            let rel = (ate - spec.analytic_ate()).abs() / spec.analytic_ate().abs();
            assert!(rel < 0.02, "relative error {rel}");
        }
    }

    #[test]
    fn unconfounded_difference_in_means_is_unbiased() {
        // 50 seeds; the mean z-score of (diff-in-means - ATE) must stay within
        // 3 standard errors of zero
        let mut errors = Vec::new();
        for seed in 0..50 {
            let spec = SyntheticSpec {
                n: 1000,
                d: 3,
                confounding: 0.0,
                seed,
                ..Default::default()
            };
            let ds = generate_synthetic(&spec).unwrap();
            let y = ds.outcome();
            let t = ds.treatment();
            let mean = |arm: u8| {
                let v: Vec<f64> = (0..ds.n()).filter(|&i| t[i] == arm).map(|i| y[i]).collect();
                v.iter().sum::<f64>() / v.len() as f64
            };
            errors.push(mean(1) - mean(0) - spec.analytic_ate());
        }
        let m = errors.iter().sum::<f64>() / errors.len() as f64;
        let sd = (errors.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (errors.len() - 1) as f64).sqrt();
        let se = sd / (errors.len() as f64).sqrt();
        assert!(m.abs() < 3.0 * se, "bias {m} vs se {se}");
        // and the propensity really is flat
        let spec = SyntheticSpec { confounding: 0.0, ..Default::default() };
        assert_eq!(spec.propensity(&[2.0, -1.0, 3.0]), 0.5);
    }

    #[test]
    fn ihdp_surrogate_shape() {
        let ds = generate_ihdp_surrogate(1).unwrap();
        assert_eq!(ds.n(), 747);
        assert_eq!(ds.d(), 25);
        assert!(ds.mu0().is_some() && ds.y_cf().is_some());
        let n_t = ds.n_treated() as f64;
        assert!((100.0..180.0).contains(&n_t), "{n_t}");
        let tau = ds.true_cate().unwrap();
        let att: f64 = ds.arm_indices(true).iter().map(|&i| tau[i]).sum::<f64>() / n_t;
        approx::assert_abs_diff_eq!(att, 4.0, epsilon = 1e-9);
        assert_eq!(ds, generate_ihdp_surrogate(1).unwrap());
    }
}
