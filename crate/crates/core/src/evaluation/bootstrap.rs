use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CbdtError, Result};
use crate::evaluation::stats::{mean, percentile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }
}

fn check_level(level: f64, draws: usize) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(CbdtError::validation(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if draws == 0 {
        return Err(CbdtError::validation("bootstrap needs at least one draw"));
    }
    Ok(())
}

/// Equal-tailed percentile interval of bootstrap replicates.
pub fn percentile_interval(estimate: f64, replicates: &[f64], level: f64) -> Interval {
    let tail = (1.0 - level) / 2.0;
    Interval {
        estimate,
        lo: percentile(replicates, tail),
        hi: percentile(replicates, 1.0 - tail),
    }
}

/// Percentile bootstrap interval for the mean of `values`.
pub fn bootstrap_mean(values: &[f64], draws: usize, level: f64, seed: u64) -> Result<Interval> {
    check_level(level, draws)?;
    if values.is_empty() {
        return Err(CbdtError::validation("bootstrap of an empty sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = values.len();
    let replicates: Vec<f64> = (0..draws)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    Ok(percentile_interval(mean(values), &replicates, level))
}

/// Percentile interval for an ATE written as the mean of per-row
/// contributions (AIPW scores, or plug-in effects), resampling rows with
/// replacement within each arm so both arms keep their sizes.
pub fn stratified_bootstrap_ate(
    contributions: &[f64],
    treatment: &[u8],
    draws: usize,
    level: f64,
    seed: u64,
) -> Result<Interval> {
    check_level(level, draws)?;
    if contributions.len() != treatment.len() {
        return Err(CbdtError::validation(format!(
            "{} contributions for {} treatment flags",
            contributions.len(),
            treatment.len()
        )));
    }
    let arms: [Vec<usize>; 2] = [0u8, 1u8].map(|a| (0..treatment.len()).filter(|&i| treatment[i] == a).collect());
    if arms.iter().any(Vec::is_empty) {
        return Err(CbdtError::validation("stratified bootstrap needs both arms"));
    }
    let n = contributions.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let replicates: Vec<f64> = (0..draws)
        .map(|_| {
            let mut sum = 0.0;
            for arm in &arms {
                for _ in 0..arm.len() {
                    sum += contributions[arm[rng.random_range(0..arm.len())]];
                }
            }
            sum / n
        })
        .collect();
    Ok(percentile_interval(mean(contributions), &replicates, level))
}

/// One outer replication of a coverage study.
#[derive(Debug, Clone)]
pub struct CoverageSample {
    pub contributions: Vec<f64>,
    pub treatment: Vec<u8>,
    pub true_ate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageResult {
    pub coverage: f64,
    pub level: f64,
    pub draws: usize,
    pub intervals: Vec<(u64, Interval, f64, bool)>,
}

/// Fraction of outer seeds whose stratified bootstrap interval contains the true ATE.
///
/// `sample` builds one outer replication (typically a fresh dataset and
/// its AIPW scores) from a seed.
pub fn bootstrap_coverage<F>(outer_seeds: &[u64], draws: usize, level: f64, sample: F) -> Result<CoverageResult>
where
    F: Fn(u64) -> Result<CoverageSample> + Sync,
{
    if draws < 50 {
        return Err(CbdtError::validation(format!("coverage needs at least 50 bootstrap draws, got {draws}")));
    }
    check_level(level, draws)?;
    if outer_seeds.is_empty() {
        return Err(CbdtError::validation("coverage needs at least one outer seed"));
    }
    let one = |seed: u64| -> Result<(u64, Interval, f64, bool)> {
        let s = sample(seed)?;
        let ci = stratified_bootstrap_ate(&s.contributions, &s.treatment, draws, level, seed ^ 0x5eed)?;
        Ok((seed, ci, s.true_ate, ci.contains(s.true_ate)))
    };
    #[cfg(feature = "parallel")]
    let intervals: Vec<_> = {
        use rayon::prelude::*;
        outer_seeds.par_iter().map(|&s| one(s)).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let intervals: Vec<_> = outer_seeds.iter().map(|&s| one(s)).collect::<Result<_>>()?;
    let covered = intervals.iter().filter(|r| r.3).count();
    Ok(CoverageResult {
        coverage: covered as f64 / intervals.len() as f64,
        level,
        draws,
        intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn const_sample(value: f64, truth: f64) -> CoverageSample {
        CoverageSample {
            contributions: vec![value; 40],
            treatment: (0..40).map(|i| (i % 2) as u8).collect(),
            true_ate: truth,
        }
    }

    #[test]
    fn exact_estimator_always_covers() {
        let r = bootstrap_coverage(&[1, 2, 3], 100, 0.95, |_| Ok(const_sample(2.0, 2.0))).unwrap();
        assert_eq!(r.coverage, 1.0);
    }

    #[test]
    fn far_estimator_never_covers() {
        let r = bootstrap_coverage(&[1, 2, 3], 100, 0.95, |s| {
            let mut c = const_sample(12.0, 2.0);
            c.contributions[s as usize] += 1e-3;
            Ok(c)
        })
        .unwrap();
        assert_eq!(r.coverage, 0.0);
    }

    #[test]
    fn too_few_draws_rejected() {
        assert!(bootstrap_coverage(&[1], 10, 0.95, |_| Ok(const_sample(0.0, 0.0))).is_err());
    }

    #[test]
    fn mean_interval_brackets_the_mean() {
        let v: Vec<f64> = (0..100).map(|i| (i as f64 * 0.7).sin()).collect();
        let ci = bootstrap_mean(&v, 500, 0.9, 4).unwrap();
        assert!(ci.lo < ci.estimate && ci.estimate < ci.hi);
        assert_eq!(ci, bootstrap_mean(&v, 500, 0.9, 4).unwrap());
    }
}
