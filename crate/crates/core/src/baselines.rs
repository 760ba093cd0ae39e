//! S-, T-, X- and DR-learners on top of the plain boosting core.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_partition, CausalDataset};
use crate::error::{CbdtError, Result};
use crate::estimator::CateEstimator;
use crate::gbdt::{fit_gbdt, GbdtModel, GbdtParams, Objective, TreeParams};
use crate::matrix::Matrix;
use crate::nuisance::{aipw_scores, clip_propensity, fit_nuisance, NuisanceModels};
use crate::persist;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaKind {
    S,
    T,
    X,
    Dr,
}

impl MetaKind {
    pub const ALL: [MetaKind; 4] = [MetaKind::S, MetaKind::T, MetaKind::X, MetaKind::Dr];

    pub fn name(self) -> &'static str {
        match self {
            MetaKind::S => "s",
            MetaKind::T => "t",
            MetaKind::X => "x",
            MetaKind::Dr => "dr",
        }
    }
}

impl std::str::FromStr for MetaKind {
    type Err = CbdtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s" => Ok(MetaKind::S),
            "t" => Ok(MetaKind::T),
            "x" => Ok(MetaKind::X),
            "dr" => Ok(MetaKind::Dr),
            other => Err(CbdtError::validation(format!(
                "unknown learner {other:?} (expected s, t, x or dr)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaLearnerSpec {
    pub kind: MetaKind,
    /// Settings shared by every outcome/effect model of the learner.
    pub base: GbdtParams,
    /// Settings for propensity and cross-fitted nuisance models.
    pub nuisance: GbdtParams,
    pub seed: u64,
}

impl MetaLearnerSpec {
    pub fn new(kind: MetaKind) -> Self {
        MetaLearnerSpec {
            kind,
            base: GbdtParams::default(),
            nuisance: GbdtParams::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base.rounds == 0 {
            return Err(CbdtError::validation("learner rounds must be at least 1"));
        }
        self.base.validate()?;
        self.nuisance.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetaModel {
    /// One model over `(t, x)`.
    S { outcome: GbdtModel },
    /// One outcome model per arm.
    T { control: GbdtModel, treated: GbdtModel },
    /// Arm-wise imputed effects blended by the propensity.
    X {
        control_effect: GbdtModel,
        treated_effect: GbdtModel,
        propensity: GbdtModel,
    },
    /// Regression of AIPW scores on `x`.
    Dr { effect: GbdtModel },
}

/// A fitted meta-learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaLearner {
    pub spec: MetaLearnerSpec,
    pub n_features: usize,
    pub model: MetaModel,
    /// Covariates whose ranges do not overlap between arms; estimates there
    /// are extrapolations.
    pub disjoint_support: Vec<usize>,
}

impl MetaLearner {
    pub fn kind(&self) -> MetaKind {
        self.spec.kind
    }

    pub fn predict_cate(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features {
            return Err(CbdtError::validation(format!(
                "learner expects {} covariates, got {}",
                self.n_features,
                x.cols()
            )));
        }
        match &self.model {
            MetaModel::S { outcome } => {
                let treated = outcome.predict(&x.prepend_constant(1.0))?;
                let control = outcome.predict(&x.prepend_constant(0.0))?;
                Ok(difference(&treated, &control))
            }
            MetaModel::T { control, treated } => Ok(difference(&treated.predict(x)?, &control.predict(x)?)),
            MetaModel::X {
                control_effect,
                treated_effect,
                propensity,
            } => {
                let t0 = control_effect.predict(x)?;
                let t1 = treated_effect.predict(x)?;
                let e = propensity.predict(x)?;
                Ok((0..x.rows())
                    .map(|i| {
                        let g = clip_propensity(e[i]);
                        g * t0[i] + (1.0 - g) * t1[i]
                    })
                    .collect())
            }
            MetaModel::Dr { effect } => effect.predict(x),
        }
    }

    /// Factual outcome predictions, for learners with outcome models.
    pub fn predict_outcome(&self, x: &Matrix, treatment: &[u8]) -> Result<Option<Vec<f64>>> {
        let t: Vec<f64> = treatment.iter().map(|&v| f64::from(v)).collect();
        match &self.model {
            MetaModel::S { outcome } => Ok(Some(outcome.predict(&x.prepend_column(&t)?)?)),
            MetaModel::T { control, treated } => {
                let (c, tr) = (control.predict(x)?, treated.predict(x)?);
                Ok(Some((0..x.rows()).map(|i| if treatment[i] == 1 { tr[i] } else { c[i] }).collect()))
            }
            _ => Ok(None),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        persist::save(&model_kind(self.kind()), self, path)
    }

    pub fn load(kind: MetaKind, path: impl AsRef<Path>) -> Result<Self> {
        persist::load(&model_kind(kind), path)
    }
}

pub fn model_kind(kind: MetaKind) -> String {
    format!("meta-{}", kind.name())
}

impl CateEstimator for MetaLearner {
    fn predict_cate(&self, x: &Matrix) -> Result<Vec<f64>> {
        MetaLearner::predict_cate(self, x)
    }

    fn n_features(&self) -> usize {
        self.n_features
    }
}

fn difference(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(a, b)| a - b).collect()
}

fn disjoint_support(ds: &CausalDataset) -> Vec<usize> {
    let x = ds.features();
    let range = |rows: &[usize], j: usize| {
        rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(x.get(i, j)), hi.max(x.get(i, j)))
        })
    };
    let (treated, control) = (ds.arm_indices(true), ds.arm_indices(false));
    (0..ds.d())
        .filter(|&j| {
            let (tl, th) = range(&treated, j);
            let (cl, ch) = range(&control, j);
            th < cl || ch < tl
        })
        .collect()
}

fn fit_on_arm(ds: &CausalDataset, treated: bool, target: &[f64], params: &GbdtParams) -> Result<GbdtModel> {
    let rows = ds.arm_indices(treated);
    let need = 2 * params.tree.min_samples_leaf;
    if rows.len() < need {
        let arm = if treated { "treated" } else { "control" };
        return Err(CbdtError::validation(format!(
            "{arm} arm has {} rows; its model needs at least {need}",
            rows.len()
        )));
    }
    let y: Vec<f64> = rows.iter().map(|&i| target[i]).collect();
    fit_gbdt(&ds.features().select_rows(&rows), &y, params, Objective::SquaredError)
}

pub fn fit_meta(spec: &MetaLearnerSpec, ds: &CausalDataset) -> Result<MetaLearner> {
    fit_meta_with_nuisance(spec, ds, None)
}

/// Like [`fit_meta`]; the DR-learner reuses `nuisance` when given.
pub fn fit_meta_with_nuisance(
    spec: &MetaLearnerSpec,
    ds: &CausalDataset,
    nuisance: Option<&NuisanceModels>,
) -> Result<MetaLearner> {
    spec.validate()?;
    let y = ds.outcome();
    let model = match spec.kind {
        MetaKind::S => {
            let xa = ds.features().prepend_column(&ds.treatment_f64())?;
            MetaModel::S {
                outcome: fit_gbdt(&xa, y, &spec.base, Objective::SquaredError)?,
            }
        }
        MetaKind::T => MetaModel::T {
            control: fit_on_arm(ds, false, y, &spec.base)?,
            treated: fit_on_arm(ds, true, y, &spec.base)?,
        },
        MetaKind::X => {
            let mu0 = fit_on_arm(ds, false, y, &spec.base)?.predict(ds.features())?;
            let mu1 = fit_on_arm(ds, true, y, &spec.base)?.predict(ds.features())?;
            // imputed effects: treated y − μ̂0(x), control μ̂1(x) − y
            let imputed: Vec<f64> = (0..ds.n())
                .map(|i| if ds.treatment()[i] == 1 { y[i] - mu0[i] } else { mu1[i] - y[i] })
                .collect();
            MetaModel::X {
                control_effect: fit_on_arm(ds, false, &imputed, &spec.base)?,
                treated_effect: fit_on_arm(ds, true, &imputed, &spec.base)?,
                propensity: fit_gbdt(ds.features(), &ds.treatment_f64(), &spec.nuisance, Objective::Logistic)?,
            }
        }
        MetaKind::Dr => {
            let owned;
            let nm = match nuisance {
                Some(nm) => nm,
                None => {
                    owned = fit_nuisance(ds, &spec.nuisance, spec.seed)?;
                    &owned
                }
            };
            let scores = aipw_scores(ds.treatment(), y, &nm.cross_fitted)?;
            MetaModel::Dr {
                effect: fit_gbdt(ds.features(), &scores, &spec.base, Objective::SquaredError)?,
            }
        }
    };
    Ok(MetaLearner {
        spec: spec.clone(),
        n_features: ds.d(),
        model,
        disjoint_support: disjoint_support(ds),
    })
}

/// The documented tuning grid: depth {2, 3, 4} × rounds {100, 300}, ν = 0.1.
pub fn default_grid(base: &TreeParams) -> Vec<GbdtParams> {
    let mut grid = Vec::new();
    for depth in [2, 3, 4] {
        for rounds in [100, 300] {
            grid.push(GbdtParams {
                rounds,
                learning_rate: 0.1,
                tree: TreeParams {
                    max_depth: depth,
                    ..base.clone()
                },
            });
        }
    }
    grid
}

/// Result of a grid search: the chosen settings refitted on all rows.
#[derive(Debug, Clone)]
pub struct Tuned {
    pub learner: MetaLearner,
    pub validation_score: f64,
    pub scores: Vec<(GbdtParams, f64)>,
}

/// Pick base-learner settings on a stratified validation split, then refit.
///
/// S and T are scored by factual squared error. X and DR have no factual
/// prediction; they are scored by squared error against AIPW scores of the
/// validation rows, with nuisances fitted on the training part.
pub fn tune_meta(
    kind: MetaKind,
    grid: &[GbdtParams],
    nuisance: &GbdtParams,
    ds: &CausalDataset,
    validation_fraction: f64,
    seed: u64,
) -> Result<Tuned> {
    if grid.is_empty() {
        return Err(CbdtError::validation("tuning grid is empty"));
    }
    let (train_idx, val_idx) = stratified_partition(ds.treatment(), 1.0 - validation_fraction, seed)?;
    let train = ds.subset(&train_idx)?;
    let val = ds.subset(&val_idx)?;
    let val_scores = match kind {
        MetaKind::X | MetaKind::Dr => {
            let nm = fit_nuisance(&train, nuisance, seed)?;
            let est = nm.predict(val.features())?;
            Some(aipw_scores(val.treatment(), val.outcome(), &est)?)
        }
        _ => None,
    };
    let train_nuisance = match kind {
        MetaKind::Dr => Some(fit_nuisance(&train, nuisance, seed)?),
        _ => None,
    };
    let mut scores = Vec::with_capacity(grid.len());
    for params in grid {
        let spec = MetaLearnerSpec {
            kind,
            base: params.clone(),
            nuisance: nuisance.clone(),
            seed,
        };
        let learner = fit_meta_with_nuisance(&spec, &train, train_nuisance.as_ref())?;
        let score = match &val_scores {
            Some(target) => mse(&learner.predict_cate(val.features())?, target),
            None => {
                let pred = learner
                    .predict_outcome(val.features(), val.treatment())?
                    .expect("S and T learners predict outcomes");
                mse(&pred, val.outcome())
            }
        };
        scores.push((params.clone(), score));
    }
    // first minimum wins, so ties resolve to the earlier grid entry
    let best = scores
        .iter()
        .enumerate()
        .fold(0, |b, (i, s)| if s.1 < scores[b].1 { i } else { b });
    let spec = MetaLearnerSpec {
        kind,
        base: scores[best].0.clone(),
        nuisance: nuisance.clone(),
        seed,
    };
    Ok(Tuned {
        learner: fit_meta(&spec, ds)?,
        validation_score: scores[best].1,
        scores,
    })
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticSpec};

    fn quick(kind: MetaKind) -> MetaLearnerSpec {
        let p = GbdtParams {
            rounds: 30,
            ..Default::default()
        };
        MetaLearnerSpec {
            kind,
            base: p.clone(),
            nuisance: p,
            seed: 1,
        }
    }

    #[test]
    fn every_kind_fits_and_predicts() {
        let ds = generate_synthetic(&SyntheticSpec {
            n: 300,
            d: 3,
            ..Default::default()
        })
        .unwrap();
        for kind in MetaKind::ALL {
            let m = fit_meta(&quick(kind), &ds).unwrap();
            let tau = m.predict_cate(ds.features()).unwrap();
            assert_eq!(tau.len(), 300);
            assert!(tau.iter().all(|v| v.is_finite()), "{kind:?}");
        }
    }

    #[test]
    fn zero_round_learner_is_constant() {
        let base = |v| GbdtModel::constant(Objective::SquaredError, v, 2);
        let m = MetaLearner {
            spec: quick(MetaKind::T),
            n_features: 2,
            model: MetaModel::T {
                control: base(1.0),
                treated: base(3.5),
            },
            disjoint_support: vec![],
        };
        let x = Matrix::new(3, 2, vec![0.0, 1.0, 2.0, 3.0, -1.0, 9.0]).unwrap();
        assert_eq!(m.predict_cate(&x).unwrap(), vec![2.5; 3]);
    }

    #[test]
    fn small_arm_is_named() {
        let x = Matrix::from_columns(&[(0..30).map(f64::from).collect()]).unwrap();
        let mut t = vec![0u8; 30];
        t[0] = 1;
        let ds = CausalDataset::new(x, t, vec![0.0; 30], vec!["x1".into()]).unwrap();
        let err = fit_meta(&quick(MetaKind::T), &ds).unwrap_err().to_string();
        assert!(err.contains("treated arm"), "{err}");
    }

    #[test]
    fn disjoint_support_is_flagged() {
        let x = Matrix::from_columns(&[(0..40).map(f64::from).collect(), vec![1.0; 40]]).unwrap();
        let t: Vec<u8> = (0..40).map(|i| u8::from(i >= 20)).collect();
        let y: Vec<f64> = (0..40).map(f64::from).collect();
        let ds = CausalDataset::new(x, t, y, vec!["a".into(), "b".into()]).unwrap();
        let m = fit_meta(&quick(MetaKind::T), &ds).unwrap();
        assert_eq!(m.disjoint_support, vec![0]);
        assert!(m.predict_cate(ds.features()).unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn learner_names_parse() {
        assert_eq!("DR".parse::<MetaKind>().unwrap(), MetaKind::Dr);
        assert!("r".parse::<MetaKind>().is_err());
    }
}
