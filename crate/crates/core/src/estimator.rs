use crate::error::Result;
use crate::matrix::Matrix;

/// Anything that maps covariates to per-row effect estimates.
pub trait CateEstimator {
    fn predict_cate(&self, x: &Matrix) -> Result<Vec<f64>>;

    /// Number of covariates the estimator expects.
    fn n_features(&self) -> usize;
}

impl CateEstimator for crate::booster::BoostedModel {
    fn predict_cate(&self, x: &Matrix) -> Result<Vec<f64>> {
        crate::booster::BoostedModel::predict_cate(self, x)
    }

    fn n_features(&self) -> usize {
        self.n_features
    }
}

/// Effect estimates that are already known, e.g. an analytic surface.
pub struct FnEstimator<F> {
    pub n_features: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64> CateEstimator for FnEstimator<F> {
    fn predict_cate(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok((0..x.rows()).map(|i| (self.f)(x.row(i))).collect())
    }

    fn n_features(&self) -> usize {
        self.n_features
    }
}

impl CateEstimator for crate::gbdt::RegressionTree {
    fn predict_cate(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.predict(x)
    }

    fn n_features(&self) -> usize {
        self.n_features
    }
}
