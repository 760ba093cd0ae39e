//! Tabular preprocessing: imputation, IQR outlier removal, z-scoring with
//! clipping, and one-hot encoding.
//!
//! Steps run in this order:
//!
//! 1. missing covariate values are imputed per column;
//! 2. rows where any continuous covariate falls outside
//!    `[Q1 - k*IQR, Q3 + k*IQR]` are removed (fences computed once, on the
//!    imputed table; quartiles by linear interpolation between order
//!    statistics);
//! 3. continuous covariates are z-scored (population standard deviation)
//!    and clipped to `±zscore_clip_sigma`;
//! 4. categorical covariates are expanded into one indicator column per
//!    level, levels sorted.
//!
//! Treatment and outcome columns are never transformed and never drive row
//! removal.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::CausalDataset;
use crate::error::{CbdtError, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Imputation {
    #[default]
    Median,
    /// Average of several seeded hot-deck draws from the observed values.
    Multiple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessSpec {
    pub iqr_multiplier: f64,
    pub zscore_clip_sigma: f64,
    /// Indices (into the raw table) of categorical covariates.
    pub categorical_columns: BTreeSet<usize>,
    /// Per-column imputation override; columns not listed use the median.
    pub imputation: BTreeMap<usize, Imputation>,
    pub seed: u64,
}

impl Default for PreprocessSpec {
    fn default() -> Self {
        PreprocessSpec {
            iqr_multiplier: 1.5,
            zscore_clip_sigma: 3.0,
            categorical_columns: BTreeSet::new(),
            imputation: BTreeMap::new(),
            seed: 0,
        }
    }
}

impl PreprocessSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.iqr_multiplier > 0.0 && self.iqr_multiplier.is_finite()) {
            return Err(CbdtError::validation("iqr_multiplier must be positive"));
        }
        if !(self.zscore_clip_sigma > 0.0 && self.zscore_clip_sigma.is_finite()) {
            return Err(CbdtError::validation("zscore_clip_sigma must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawValues {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl RawValues {
    fn len(&self) -> usize {
        match self {
            RawValues::Numeric(v) => v.len(),
            RawValues::Categorical(v) => v.len(),
        }
    }

    fn all_missing(&self) -> bool {
        match self {
            RawValues::Numeric(v) => v.iter().all(|x| x.map_or(true, |x| !x.is_finite())),
            RawValues::Categorical(v) => v.iter().all(Option::is_none),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawColumn {
    pub name: String,
    pub values: RawValues,
}

/// An unprocessed table with the treatment and outcome columns identified.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub columns: Vec<RawColumn>,
    pub treatment_column: usize,
    pub outcome_column: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PreprocessReport {
    /// Original indices of rows removed by the IQR rule.
    pub rows_removed: Vec<usize>,
    pub imputed_values: usize,
    pub clipped_values: usize,
    /// Columns passed through as constant zero.
    pub zero_variance_columns: Vec<String>,
    pub warnings: Vec<String>,
}

/// Quantile by linear interpolation between order statistics of `sorted`.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn median(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, 0.5)
}

enum Covariate {
    Continuous { name: String, values: Vec<f64> },
    Categorical { name: String, values: Vec<String> },
}

pub fn preprocess(raw: &RawTable, spec: &PreprocessSpec) -> Result<(CausalDataset, PreprocessReport)> {
    spec.validate()?;
    let ncols = raw.columns.len();
    if raw.treatment_column >= ncols || raw.outcome_column >= ncols {
        return Err(CbdtError::validation("treatment or outcome column index out of range"));
    }
    if raw.treatment_column == raw.outcome_column {
        return Err(CbdtError::validation("treatment and outcome must be different columns"));
    }
    let n = raw.columns[raw.treatment_column].values.len();
    for c in &raw.columns {
        if c.values.len() != n {
            return Err(CbdtError::validation(format!(
                "column {:?} has {} rows, expected {n}",
                c.name,
                c.values.len()
            )));
        }
        if c.values.all_missing() {
            return Err(CbdtError::validation(format!("column {:?} is entirely missing", c.name)));
        }
    }

    let numeric = |j: usize, what: &str| -> Result<Vec<f64>> {
        match &raw.columns[j].values {
            RawValues::Numeric(v) => v
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    x.filter(|x| x.is_finite()).ok_or_else(|| {
                        CbdtError::validation(format!("row {i}: {what} value is missing"))
                    })
                })
                .collect(),
            RawValues::Categorical(_) => Err(CbdtError::validation(format!("{what} column must be numeric"))),
        }
    };
    let treatment_raw = numeric(raw.treatment_column, "treatment")?;
    let outcome = numeric(raw.outcome_column, "outcome")?;
    let mut treatment = Vec::with_capacity(n);
    for (i, t) in treatment_raw.iter().enumerate() {
        if *t != 0.0 && *t != 1.0 {
            return Err(CbdtError::validation(format!("row {i}: treatment must be 0 or 1, got {t}")));
        }
        treatment.push(*t as u8);
    }

    let mut report = PreprocessReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // 1. imputation
    let mut covariates = Vec::new();
    for (j, col) in raw.columns.iter().enumerate() {
        if j == raw.treatment_column || j == raw.outcome_column {
            continue;
        }
        let categorical = spec.categorical_columns.contains(&j);
        match (&col.values, categorical) {
            (RawValues::Numeric(v), false) => {
                let observed: Vec<f64> = v.iter().filter_map(|x| x.filter(|x| x.is_finite())).collect();
                let method = spec.imputation.get(&j).copied().unwrap_or_default();
                let fill_median = median(&observed);
                let mut values = Vec::with_capacity(n);
                for x in v {
                    match x.filter(|x| x.is_finite()) {
                        Some(x) => values.push(x),
                        None => {
                            report.imputed_values += 1;
                            values.push(match method {
                                Imputation::Median => fill_median,
                                Imputation::Multiple => {
                                    const DRAWS: usize = 5;
                                    (0..DRAWS)
                                        .map(|_| observed[rng.random_range(0..observed.len())])
                                        .sum::<f64>()
                                        / DRAWS as f64
                                }
                            });
                        }
                    }
                }
                covariates.push(Covariate::Continuous {
                    name: col.name.clone(),
                    values,
                });
            }
            (values, true) | (values @ RawValues::Categorical(_), false) => {
                let labels: Vec<Option<String>> = match values {
                    RawValues::Categorical(v) => v.clone(),
                    RawValues::Numeric(v) => v
                        .iter()
                        .map(|x| x.filter(|x| x.is_finite()).map(|x| x.to_string()))
                        .collect(),
                };
                // most frequent level; ties go to the smallest label
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for l in labels.iter().flatten() {
                    *counts.entry(l.as_str()).or_default() += 1;
                }
                let mode = counts
                    .iter()
                    .fold(("", 0usize), |best, (k, c)| if *c > best.1 { (k, *c) } else { best })
                    .0
                    .to_string();
                let values = labels
                    .into_iter()
                    .map(|l| {
                        l.unwrap_or_else(|| {
                            report.imputed_values += 1;
                            mode.clone()
                        })
                    })
                    .collect();
                covariates.push(Covariate::Categorical {
                    name: col.name.clone(),
                    values,
                });
            }
        }
    }

    // 2. IQR fences on continuous covariates
    let mut keep = vec![true; n];
    for cov in &covariates {
        if let Covariate::Continuous { values, .. } = cov {
            let mut s = values.clone();
            s.sort_by(f64::total_cmp);
            let q1 = quantile_sorted(&s, 0.25);
            let q3 = quantile_sorted(&s, 0.75);
            let iqr = q3 - q1;
            let lo = q1 - spec.iqr_multiplier * iqr;
            let hi = q3 + spec.iqr_multiplier * iqr;
            for (i, v) in values.iter().enumerate() {
                if *v < lo || *v > hi {
                    keep[i] = false;
                }
            }
        }
    }
    report.rows_removed = (0..n).filter(|&i| !keep[i]).collect();
    let kept: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();

    // 3-4. scale and encode
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    for cov in covariates {
        match cov {
            Covariate::Continuous { name, values } => {
                let v: Vec<f64> = kept.iter().map(|&i| values[i]).collect();
                let m = v.len() as f64;
                let mean = v.iter().sum::<f64>() / m;
                let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m).sqrt();
                if !(sd > 1e-12 * mean.abs().max(1.0)) {
                    report
                        .warnings
                        .push(format!("column {name:?} has zero variance; passed through as 0"));
                    report.zero_variance_columns.push(name.clone());
                    columns.push(vec![0.0; v.len()]);
                } else {
                    let clip = spec.zscore_clip_sigma;
                    columns.push(
                        v.iter()
                            .map(|x| {
                                let z = (x - mean) / sd;
                                if z.abs() > clip {
                                    report.clipped_values += 1;
                                    z.clamp(-clip, clip)
                                } else {
                                    z
                                }
                            })
                            .collect(),
                    );
                }
                names.push(name);
            }
            Covariate::Categorical { name, values } => {
                let levels: BTreeSet<&str> = kept.iter().map(|&i| values[i].as_str()).collect();
                for level in levels {
                    columns.push(
                        kept.iter()
                            .map(|&i| if values[i] == level { 1.0 } else { 0.0 })
                            .collect(),
                    );
                    names.push(format!("{name}={level}"));
                }
            }
        }
    }
    if columns.is_empty() {
        return Err(CbdtError::validation("table has no covariate columns"));
    }
    let features = Matrix::from_columns(&columns)?;
    let ds = CausalDataset::new(
        features,
        kept.iter().map(|&i| treatment[i]).collect(),
        kept.iter().map(|&i| outcome[i]).collect(),
        names,
    )?;
    Ok((ds, report))
}
