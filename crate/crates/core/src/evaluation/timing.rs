//! Wall-clock measurement.
//!
//! Timings are only meaningful when nothing else runs in the process; the
//! benchmark runner measures methods one after another for that reason.

use serde::{Deserialize, Serialize};

use crate::clock::Stopwatch;
use crate::error::{CbdtError, Result};

/// Shortest duration reported, so that downstream logarithms stay finite.
pub const MIN_SECONDS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSample {
    /// Mean seconds per timed repetition.
    pub mean_seconds: f64,
    pub repetitions: usize,
    pub warmup_discarded: usize,
    pub samples: Vec<f64>,
}

impl TimingSample {
    pub fn timed(&self) -> usize {
        self.repetitions - self.warmup_discarded
    }

    /// Milliseconds per item when one repetition processes `items` items.
    pub fn ms_per_item(&self, items: usize) -> f64 {
        self.mean_seconds * 1000.0 / items.max(1) as f64
    }
}

/// Run `work` `repetitions` times and average all but the first `warmup` runs.
pub fn measure_timing<F>(repetitions: usize, warmup: usize, mut work: F) -> Result<TimingSample>
where
    F: FnMut() -> Result<()>,
{
    if repetitions <= warmup {
        return Err(CbdtError::validation(format!(
            "timing needs more repetitions ({repetitions}) than warm-up runs ({warmup})"
        )));
    }
    let mut samples = Vec::with_capacity(repetitions - warmup);
    for rep in 0..repetitions {
        let clock = Stopwatch::start();
        work()?;
        let s = clock.seconds().max(MIN_SECONDS);
        if rep >= warmup {
            samples.push(s);
        }
    }
    Ok(TimingSample {
        mean_seconds: samples.iter().sum::<f64>() / samples.len() as f64,
        repetitions,
        warmup_discarded: warmup,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_timed_runs() {
        let mut calls = 0;
        let t = measure_timing(10, 2, || {
            calls += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(calls, 10);
        assert_eq!(t.samples.len(), 8);
        assert_eq!(t.timed(), 8);
        assert!(t.mean_seconds > 0.0);
    }

    #[test]
    fn warmup_must_leave_runs() {
        assert!(measure_timing(2, 2, || Ok(())).is_err());
    }

    #[test]
    fn sleep_is_measured() {
        let t = measure_timing(4, 1, || {
            std::thread::sleep(std::time::Duration::from_millis(50));
            Ok(())
        })
        .unwrap();
        let ms = t.mean_seconds * 1000.0;
        assert!((45.0..=70.0).contains(&ms), "{ms}");
    }
}
