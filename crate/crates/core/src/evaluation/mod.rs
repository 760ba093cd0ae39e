//! Metrics, statistical tests, bootstrap intervals, timing and reports.

mod bootstrap;
mod metrics;
mod report;
mod stats;
mod timing;

pub use bootstrap::{
    bootstrap_coverage, bootstrap_mean, percentile_interval, stratified_bootstrap_ate, CoverageResult,
    CoverageSample, Interval,
};
pub use metrics::{ate_error, eap, pehe, rmse, Pehe};
pub use report::{
    add_external, assemble_report, render_text, write_runs_csv, write_summary_csv, write_tests_csv, EvaluationReport, ExternalResult,
    MethodSummary, PairwiseTest, ReportOptions, RunRecord,
};
pub use stats::{
    bonferroni, bonferroni_threshold, mean, mean_ci, paired_ttest, percentile, std_dev, trimmed_mean, TTest,
};
pub use timing::{measure_timing, TimingSample, MIN_SECONDS};
