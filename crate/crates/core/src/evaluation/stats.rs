use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dataset::quantile_sorted;
use crate::error::{CbdtError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t_stat: f64,
    pub p_value: f64,
    pub df: usize,
    pub mean_difference: f64,
    /// The differences have zero variance, so the t statistic is not a
    /// ratio of finite quantities. `t_stat` is then 0 with `p_value` 1 when
    /// every difference is zero, and ±∞ with `p_value` 0 otherwise.
    pub degenerate: bool,
}

/// Two-sided paired t-test on `a − b`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(CbdtError::validation(format!("paired samples of lengths {} and {}", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(CbdtError::validation("a paired t-test needs at least 2 pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let df = n - 1;
    // relative test so that rounding noise in "constant" differences counts as zero
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if var.sqrt() <= 1e-12 * scale || var == 0.0 {
        let (t_stat, p_value) = if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean), 0.0)
        };
        return Ok(TTest {
            t_stat,
            p_value,
            df,
            mean_difference: mean,
            degenerate: true,
        });
    }
    let t_stat = mean / (var.sqrt() / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| CbdtError::numerical(e.to_string()))?;
    let p_value = (2.0 * dist.cdf(-t_stat.abs())).min(1.0);
    Ok(TTest {
        t_stat,
        p_value,
        df,
        mean_difference: mean,
        degenerate: false,
    })
}

pub fn bonferroni_threshold(alpha: f64, family_size: usize) -> Result<f64> {
    if family_size == 0 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(CbdtError::validation(format!(
            "Bonferroni needs 0 < alpha < 1 and a non-empty family (alpha {alpha}, family {family_size})"
        )));
    }
    Ok(alpha / family_size as f64)
}

/// `p < alpha / family_size` for each p-value.
pub fn bonferroni(p_values: &[f64], family_size: usize, alpha: f64) -> Result<Vec<bool>> {
    let threshold = bonferroni_threshold(alpha, family_size)?;
    Ok(p_values.iter().map(|p| *p < threshold).collect())
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean after dropping one largest and one smallest value (plain mean below 3 values).
pub fn trimmed_mean(values: &[f64]) -> f64 {
    if values.len() < 3 {
        return mean(values);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    mean(&sorted[1..sorted.len() - 1])
}

/// Sample standard deviation (n − 1).
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// `mean ± t_{n−1} · sd/√n` interval for the mean.
pub fn mean_ci(values: &[f64], level: f64) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(CbdtError::validation("confidence interval of an empty sample"));
    }
    let m = mean(values);
    if values.len() < 2 {
        return Ok((m, m));
    }
    let dist = StudentsT::new(0.0, 1.0, (values.len() - 1) as f64).map_err(|e| CbdtError::numerical(e.to_string()))?;
    let q = dist.inverse_cdf(0.5 + level / 2.0);
    let half = q * std_dev(values) / (values.len() as f64).sqrt();
    Ok((m - half, m + half))
}

/// Type-7 percentile of an unsorted sample, `q` in `[0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}
