use crate::gbdt::{SplitMode, TreeParams};
use crate::matrix::Matrix;

/// One feature's values mapped to ordered bins.
///
/// Each bin keeps the smallest and largest training value it holds; the
/// split threshold between bins `b` and `b+1` is the midpoint
/// `(max[b] + min[b+1]) / 2`.
#[derive(Debug, Clone)]
pub(crate) struct FeatureBins {
    pub bin_of_row: Vec<u32>,
    pub bin_min: Vec<f64>,
    pub bin_max: Vec<f64>,
}

impl FeatureBins {
    pub fn n_bins(&self) -> usize {
        self.bin_min.len()
    }

    /// Midpoint between two bins; empty bins in between are skipped over.
    pub fn threshold_between(&self, left_bin: usize, right_bin: usize) -> f64 {
        0.5 * (self.bin_max[left_bin] + self.bin_min[right_bin])
    }

    fn build(values: &[f64], mode: SplitMode, max_bins: usize) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        // distinct values with multiplicities
        let mut distinct: Vec<(f64, usize)> = Vec::new();
        for v in sorted {
            match distinct.last_mut() {
                Some((last, c)) if *last == v => *c += 1,
                _ => distinct.push((v, 1)),
            }
        }
        let limit = match mode {
            SplitMode::Exact => usize::MAX,
            SplitMode::Histogram => max_bins,
        };
        // group consecutive distinct values into bins of roughly equal counts
        let mut bin_of_distinct = Vec::with_capacity(distinct.len());
        let mut bin_min = Vec::new();
        let mut bin_max = Vec::new();
        if distinct.len() <= limit {
            for (i, (v, _)) in distinct.iter().enumerate() {
                bin_of_distinct.push(i as u32);
                bin_min.push(*v);
                bin_max.push(*v);
            }
        } else {
            let n = values.len() as f64;
            let per_bin = n / limit as f64;
            let mut acc = 0usize;
            let mut open = false;
            for (i, (v, c)) in distinct.iter().enumerate() {
                if !open {
                    bin_min.push(*v);
                    bin_max.push(*v);
                    open = true;
                }
                let b = bin_min.len() - 1;
                bin_of_distinct.push(b as u32);
                bin_max[b] = *v;
                acc += c;
                let remaining_values = distinct.len() - i - 1;
                if acc as f64 >= per_bin * (b + 1) as f64 && bin_min.len() < limit && remaining_values > 0 {
                    open = false;
                }
            }
        }
        let bin_of_row = values
            .iter()
            .map(|v| {
                let pos = distinct
                    .binary_search_by(|(d, _)| d.total_cmp(v))
                    .expect("value present in its own distinct set");
                bin_of_distinct[pos]
            })
            .collect();
        FeatureBins {
            bin_of_row,
            bin_min,
            bin_max,
        }
    }
}

/// Feature matrix pre-binned once so many trees can reuse it.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    pub(crate) n_rows: usize,
    pub(crate) features: Vec<FeatureBins>,
}

impl BinnedMatrix {
    pub fn new(x: &Matrix, params: &TreeParams) -> Self {
        let features = (0..x.cols())
            .map(|j| FeatureBins::build(&x.column(j), params.mode, params.max_bins))
            .collect();
        BinnedMatrix {
            n_rows: x.rows(),
            features,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_bins_are_distinct_values() {
        let b = FeatureBins::build(&[3.0, 1.0, 3.0, 2.0], SplitMode::Exact, 2);
        assert_eq!(b.bin_min, vec![1.0, 2.0, 3.0]);
        assert_eq!(b.bin_of_row, vec![2, 0, 2, 1]);
        assert_eq!(b.threshold_between(0, 1), 1.5);
    }

    #[test]
    fn histogram_respects_max_bins_and_order() {
        let values: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = FeatureBins::build(&values, SplitMode::Histogram, 16);
        assert!(b.n_bins() <= 16 && b.n_bins() >= 8, "{}", b.n_bins());
        for k in 0..b.n_bins() - 1 {
            assert!(b.bin_max[k] < b.bin_min[k + 1]);
        }
        for (v, bin) in values.iter().zip(&b.bin_of_row) {
            let bin = *bin as usize;
            assert!(*v >= b.bin_min[bin] && *v <= b.bin_max[bin]);
        }
    }

    #[test]
    fn histogram_with_enough_bins_equals_exact() {
        let values: Vec<f64> = (0..50).map(|i| ((i * 13) % 17) as f64).collect();
        let e = FeatureBins::build(&values, SplitMode::Exact, 255);
        let h = FeatureBins::build(&values, SplitMode::Histogram, 255);
        assert_eq!(e.bin_of_row, h.bin_of_row);
        assert_eq!(e.bin_min, h.bin_min);
    }
}
