//! Multi-run protocols: method benchmark, ablation, sensitivity grid and
//! doubly robust coverage.
//!
//! A protocol is a data source, a list of seeds and a list of replicates.
//! Run `j` uses seed `seeds[j]` and replicate `replicates[j % len]`; the
//! seed drives both data generation (for simulated sources) and the
//! stratified train/test split.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{default_grid, fit_meta, tune_meta, MetaKind, MetaLearnerSpec};
use crate::booster::{fit_with_nuisance, BoosterConfig, TauRefSource};
use crate::dataset::{
    generate_ihdp_surrogate, generate_synthetic, load_csv, load_ihdp_csv, preprocess, read_raw_csv, split_train_test,
    CausalDataset, PreprocessSpec, SyntheticSpec,
};
use crate::error::{CbdtError, Result};
use crate::estimator::CateEstimator;
use crate::evaluation::{
    ate_error, bootstrap_coverage, measure_timing, mean, pehe, rmse, stratified_bootstrap_ate, trimmed_mean,
    CoverageResult, CoverageSample, EvaluationReport, ExternalResult, ReportOptions, RunRecord,
};
use crate::gbdt::GbdtParams;
use crate::nuisance::{aipw_scores, fit_nuisance, NuisanceModels};
use crate::objective::CompositeLossParams;
use crate::schedule::{ScheduleConfig, ScheduleMode};

/// Environment variable naming a directory of public IHDP replicate files.
pub const IHDP_DIR_ENV: &str = "IHDP_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// Simulated IHDP-like replicates (see [`generate_ihdp_surrogate`]).
    IhdpSurrogate,
    /// Public replicate files `ihdp_npci_<r>.csv` in `dir`.
    IhdpFiles { dir: PathBuf },
    /// The synthetic generator; its seed is replaced by the run seed.
    Synthetic(SyntheticSpec),
    /// One CSV file in the canonical layout, resplit per seed.
    Csv { path: PathBuf },
    /// A CSV with named treatment and outcome columns, cleaned by
    /// [`preprocess`] before use.
    RawCsv {
        path: PathBuf,
        treatment: String,
        outcome: String,
        /// Columns to one-hot encode, by name.
        #[serde(default)]
        categorical: Vec<String>,
        #[serde(default)]
        preprocess: PreprocessSpec,
    },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(SyntheticSpec::default())
    }
}

impl DataSource {
    /// Real IHDP files when `IHDP_DIR` is set, the simulated stand-in otherwise.
    pub fn ihdp_from_env() -> Self {
        match std::env::var_os(IHDP_DIR_ENV) {
            Some(dir) if !dir.is_empty() => DataSource::IhdpFiles { dir: dir.into() },
            _ => DataSource::IhdpSurrogate,
        }
    }

    pub fn uses_replicates(&self) -> bool {
        matches!(self, DataSource::IhdpSurrogate | DataSource::IhdpFiles { .. })
    }

    pub fn load(&self, replicate: usize, seed: u64) -> Result<CausalDataset> {
        match self {
            DataSource::IhdpSurrogate => generate_ihdp_surrogate(replicate),
            DataSource::IhdpFiles { dir } => load_ihdp_csv(dir, replicate),
            DataSource::Synthetic(spec) => generate_synthetic(&SyntheticSpec {
                seed,
                ..spec.clone()
            }),
            DataSource::Csv { path } => load_csv(path),
            DataSource::RawCsv {
                path,
                treatment,
                outcome,
                categorical,
                preprocess: spec,
            } => {
                let raw = read_raw_csv(path, treatment, outcome)?;
                let mut spec = spec.clone();
                for name in categorical {
                    let j = raw.columns.iter().position(|c| &c.name == name).ok_or_else(|| CbdtError::Format {
                        path: path.clone(),
                        message: format!("categorical column {name:?} not found"),
                    })?;
                    spec.categorical_columns.insert(j);
                }
                Ok(preprocess(&raw, &spec)?.0)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            DataSource::IhdpSurrogate => "simulated IHDP-like replicates".into(),
            DataSource::IhdpFiles { dir } => format!("IHDP replicate files in {}", dir.display()),
            DataSource::Synthetic(spec) => format!("synthetic n={} d={} shape={:?}", spec.n, spec.d, spec.shape),
            DataSource::Csv { path } | DataSource::RawCsv { path, .. } => format!("CSV file {}", path.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Protocol {
    pub data: DataSource,
    pub seeds: Vec<u64>,
    pub replicates: Vec<usize>,
    pub train_fraction: f64,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            data: DataSource::default(),
            seeds: (0..10).collect(),
            replicates: (1..=10).collect(),
            train_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSpec {
    pub run: usize,
    pub seed: u64,
    pub replicate: Option<usize>,
}

impl Protocol {
    pub fn ihdp() -> Self {
        Protocol {
            data: DataSource::ihdp_from_env(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(CbdtError::validation("protocol.seeds must not be empty"));
        }
        if self.data.uses_replicates() && self.replicates.is_empty() {
            return Err(CbdtError::validation("protocol.replicates must not be empty for IHDP data"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(CbdtError::validation(format!(
                "protocol.train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if let DataSource::Synthetic(spec) = &self.data {
            spec.validate()?;
        }
        Ok(())
    }

    pub fn runs(&self) -> Vec<RunSpec> {
        self.seeds
            .iter()
            .enumerate()
            .map(|(run, &seed)| RunSpec {
                run,
                seed,
                replicate: self
                    .data
                    .uses_replicates()
                    .then(|| self.replicates[run % self.replicates.len()]),
            })
            .collect()
    }

    /// Train and test parts of one run. The test part must carry ground truth.
    pub fn split(&self, run: &RunSpec) -> Result<(CausalDataset, CausalDataset)> {
        let ds = self.data.load(run.replicate.unwrap_or(0), run.seed)?;
        if ds.true_cate().is_none() {
            return Err(CbdtError::validation(format!(
                "{} has no mu0/mu1 columns; effect metrics need ground truth (use synthetic or IHDP data)",
                self.data.describe()
            )));
        }
        split_train_test(&ds, self.train_fraction, run.seed)
    }
}

fn par_map<T, R, F>(items: Vec<T>, f: F) -> Result<Vec<R>>
where
    T: Send,
    R: Send,
    F: Fn(T) -> Result<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cbdt,
    /// CBDT with the calibration reference set to the true training ATE.
    CbdtOracle,
    S,
    T,
    X,
    Dr,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::Cbdt, Method::CbdtOracle, Method::S, Method::T, Method::X, Method::Dr];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cbdt => "cbdt",
            Method::CbdtOracle => "cbdt_oracle",
            Method::S => "s",
            Method::T => "t",
            Method::X => "x",
            Method::Dr => "dr",
        }
    }

    pub fn meta_kind(self) -> Option<MetaKind> {
        match self {
            Method::S => Some(MetaKind::S),
            Method::T => Some(MetaKind::T),
            Method::X => Some(MetaKind::X),
            Method::Dr => Some(MetaKind::Dr),
            Method::Cbdt | Method::CbdtOracle => None,
        }
    }
}

impl FromStr for Method {
    type Err = CbdtError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                CbdtError::validation(format!(
                    "unknown method {s:?}; expected one of cbdt, cbdt_oracle, s, t, x, dr"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineSettings {
    /// Grid-search depth and rounds on a validation split of the training part.
    pub tune: bool,
    /// Base learner settings when `tune` is off.
    pub base: GbdtParams,
    pub nuisance: GbdtParams,
    pub validation_fraction: f64,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        BaselineSettings {
            tune: true,
            base: GbdtParams::default(),
            nuisance: GbdtParams::default(),
            validation_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingSettings {
    pub train_repetitions: usize,
    pub train_warmup: usize,
    pub infer_repetitions: usize,
    pub infer_warmup: usize,
}

impl Default for TimingSettings {
    fn default() -> Self {
        TimingSettings {
            train_repetitions: 1,
            train_warmup: 0,
            infer_repetitions: 10,
            infer_warmup: 2,
        }
    }
}

impl TimingSettings {
    /// One timed pass each; for runs whose timings are not reported on.
    pub fn single() -> Self {
        TimingSettings {
            train_repetitions: 1,
            train_warmup: 0,
            infer_repetitions: 1,
            infer_warmup: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub protocol: Protocol,
    pub methods: Vec<Method>,
    pub booster: BoosterConfig,
    pub baselines: BaselineSettings,
    pub timing: TimingSettings,
    /// Stratified bootstrap draws for each run's test-ATE interval.
    pub coverage_draws: usize,
    pub report: ReportOptions,
    /// Published rows for systems that are not run here.
    pub external: Vec<ExternalResult>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            protocol: Protocol::ihdp(),
            methods: vec![Method::Cbdt, Method::S, Method::T, Method::X, Method::Dr],
            booster: BoosterConfig::default(),
            baselines: BaselineSettings::default(),
            timing: TimingSettings::default(),
            coverage_draws: 200,
            report: ReportOptions::default(),
            external: Vec::new(),
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        self.protocol.validate()?;
        self.booster.validate()?;
        if self.methods.is_empty() {
            return Err(CbdtError::validation("methods must not be empty"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(CbdtError::validation(format!("method {} is listed twice", m.name())));
            }
        }
        if self.coverage_draws == 0 {
            return Err(CbdtError::validation("coverage_draws must be at least 1"));
        }
        Ok(())
    }
}

/// Metrics of one fitted estimator on one run's test part.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_run<M: CateEstimator + ?Sized>(
    method: &str,
    model: &M,
    run: &RunSpec,
    test: &CausalDataset,
    train_time_s: f64,
    timing: &TimingSettings,
    coverage_draws: usize,
    level: f64,
) -> Result<RunRecord> {
    let truth = test
        .true_cate()
        .ok_or_else(|| CbdtError::validation("test data has no ground-truth effects"))?;
    let mut tau = Vec::new();
    let infer = measure_timing(timing.infer_repetitions, timing.infer_warmup, || {
        tau = model.predict_cate(test.features())?;
        Ok(())
    })?;
    let p = pehe(&tau, &truth)?;
    let ate_hat = mean(&tau);
    let ate_true = mean(&truth);
    let ci = stratified_bootstrap_ate(&tau, test.treatment(), coverage_draws, level, run.seed)?;
    Ok(RunRecord {
        method: method.to_string(),
        run: run.run,
        seed: run.seed,
        replicate: run.replicate,
        pehe_sq: p.sq,
        pehe_sqrt: p.sqrt,
        ate_hat,
        ate_true,
        ate_error: ate_error(ate_hat, ate_true),
        covered: ci.contains(ate_true),
        train_time_s,
        infer_ms_per_sample: infer.ms_per_item(test.n()),
        infer_ms_per_batch: infer.mean_seconds * 1000.0,
    })
}

fn timed_fit<T, F>(timing: &TimingSettings, mut train: F) -> Result<(T, f64)>
where
    F: FnMut() -> Result<T>,
{
    let mut out = None;
    let t = measure_timing(timing.train_repetitions, timing.train_warmup, || {
        out = Some(train()?);
        Ok(())
    })?;
    Ok((out.expect("at least one timed repetition"), t.mean_seconds))
}

fn benchmark_run(cfg: &BenchmarkConfig, run: &RunSpec) -> Result<Vec<RunRecord>> {
    let (train, test) = cfg.protocol.split(run)?;
    let level = cfg.report.ci_level;
    let mut records = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let record = match method.meta_kind() {
            None => {
                let booster = BoosterConfig {
                    tau_ref_source: if method == Method::CbdtOracle {
                        TauRefSource::GroundTruth
                    } else {
                        cfg.booster.tau_ref_source
                    },
                    ..cfg.booster.clone()
                };
                let (model, secs) = timed_fit(&cfg.timing, || fit_with_nuisance(&booster, &train, None))?;
                evaluate_run(method.name(), &model, run, &test, secs, &cfg.timing, cfg.coverage_draws, level)?
            }
            Some(kind) => {
                let base = if cfg.baselines.tune {
                    let grid = default_grid(&cfg.baselines.base.tree);
                    let tuned = tune_meta(
                        kind,
                        &grid,
                        &cfg.baselines.nuisance,
                        &train,
                        cfg.baselines.validation_fraction,
                        run.seed,
                    )?;
                    tuned.learner.spec.base
                } else {
                    cfg.baselines.base.clone()
                };
                let spec = MetaLearnerSpec {
                    base,
                    nuisance: cfg.baselines.nuisance.clone(),
                    seed: run.seed,
                    ..MetaLearnerSpec::new(kind)
                };
                let (model, secs) = timed_fit(&cfg.timing, || fit_meta(&spec, &train))?;
                evaluate_run(method.name(), &model, run, &test, secs, &cfg.timing, cfg.coverage_draws, level)?
            }
        };
        records.push(record);
    }
    Ok(records)
}

/// Every method on every run, one after another so timings are not
/// disturbed by concurrent work.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<EvaluationReport> {
    cfg.validate()?;
    let mut records = Vec::new();
    for run in cfg.protocol.runs() {
        records.extend(benchmark_run(cfg, &run)?);
    }
    let order: Vec<String> = cfg.methods.iter().map(|m| m.name().to_string()).collect();
    let title = format!("Benchmark: {}", cfg.protocol.data.describe());
    let mut report = crate::evaluation::assemble_report(&title, &records, &order, &cfg.report)?;
    if cfg.booster.loss.alpha != 0.0 && cfg.methods.contains(&Method::Cbdt) {
        report.notes.push(format!("cbdt calibration reference: {:?}", cfg.booster.tau_ref_source));
    }
    crate::evaluation::add_external(&mut report, &cfg.external);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationConfig {
    pub protocol: Protocol,
    pub booster: BoosterConfig,
    pub timing: TimingSettings,
    pub coverage_draws: usize,
    pub report: ReportOptions,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            protocol: Protocol::default(),
            booster: BoosterConfig::default(),
            timing: TimingSettings::single(),
            coverage_draws: 200,
            report: ReportOptions::default(),
        }
    }
}

/// The full model and its three ablations, in report order.
pub fn ablation_variants(full: &BoosterConfig) -> Vec<(String, BoosterConfig)> {
    vec![
        ("full".into(), full.clone()),
        (
            "no_variance".into(),
            BoosterConfig {
                loss: CompositeLossParams {
                    lambda: 0.0,
                    ..full.loss.clone()
                },
                ..full.clone()
            },
        ),
        (
            "no_ate".into(),
            BoosterConfig {
                loss: CompositeLossParams {
                    alpha: 0.0,
                    ..full.loss.clone()
                },
                ..full.clone()
            },
        ),
        (
            "static_schedule".into(),
            BoosterConfig {
                schedule: ScheduleConfig {
                    mode: ScheduleMode::Static,
                    ..full.schedule.clone()
                },
                ..full.clone()
            },
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub pehe_sqrt: f64,
    pub ate_error: f64,
    /// Change relative to the full model, in percent.
    pub pehe_change_pct: f64,
    pub ate_error_change_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    pub report: EvaluationReport,
}

fn pct(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        100.0 * (value - reference) / reference
    }
}

/// Nuisance models for a run, when some variant needs them.
fn run_nuisance(booster: &BoosterConfig, train: &CausalDataset, needed: bool) -> Result<Option<NuisanceModels>> {
    if needed {
        fit_nuisance(train, &booster.nuisance, booster.seed).map(Some)
    } else {
        Ok(None)
    }
}

pub fn run_ablation(cfg: &AblationConfig) -> Result<AblationReport> {
    cfg.protocol.validate()?;
    let variants = ablation_variants(&cfg.booster);
    for (_, v) in &variants {
        v.validate()?;
    }
    let needed = variants.iter().any(|(_, v)| v.needs_nuisance());
    let runs = cfg.protocol.runs();
    let per_run = par_map(runs, |run| {
        let (train, test) = cfg.protocol.split(&run)?;
        let nuisance = run_nuisance(&cfg.booster, &train, needed)?;
        variants
            .iter()
            .map(|(name, v)| {
                let (model, secs) = timed_fit(&cfg.timing, || fit_with_nuisance(v, &train, nuisance.as_ref()))?;
                evaluate_run(name, &model, &run, &test, secs, &cfg.timing, cfg.coverage_draws, cfg.report.ci_level)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let records: Vec<RunRecord> = per_run.into_iter().flatten().collect();
    let order: Vec<String> = variants.iter().map(|(n, _)| n.clone()).collect();
    let title = format!("Ablation: {}", cfg.protocol.data.describe());
    let report = crate::evaluation::assemble_report(&title, &records, &order, &cfg.report)?;
    let full = &report.methods[0];
    let rows = report
        .methods
        .iter()
        .map(|m| AblationRow {
            variant: m.method.clone(),
            pehe_sqrt: m.pehe_sqrt,
            ate_error: m.ate_error,
            pehe_change_pct: pct(m.pehe_sqrt, full.pehe_sqrt),
            ate_error_change_pct: pct(m.ate_error, full.ate_error),
        })
        .collect();
    Ok(AblationReport { rows, report })
}

pub fn render_ablation_text(ablation: &AblationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", ablation.report.title);
    let _ = writeln!(s, "aggregate: {}", ablation.report.aggregate);
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<16} {:>10} {:>10} {:>10} {:>10}",
        "variant", "sqrt-PEHE", "change %", "ATE err", "change %"
    );
    for r in &ablation.rows {
        let _ = writeln!(
            s,
            "{:<16} {:>10.4} {:>+10.2} {:>10.4} {:>+10.2}",
            r.variant, r.pehe_sqrt, r.pehe_change_pct, r.ate_error, r.ate_error_change_pct
        );
    }
    s
}

pub fn write_ablation_csv<W: Write>(ablation: &AblationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variant", "pehe_sqrt", "pehe_change_pct", "ate_error", "ate_error_change_pct"])?;
    for r in &ablation.rows {
        w.write_record([
            r.variant.clone(),
            r.pehe_sqrt.to_string(),
            r.pehe_change_pct.to_string(),
            r.ate_error.to_string(),
            r.ate_error_change_pct.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CbdtError::io("<csv writer>", e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SafeZone {
    pub lambda: (f64, f64),
    pub alpha: (f64, f64),
    pub eta: (f64, f64),
    /// Allowed `(max − min) / min` of cell PEHE inside the zone.
    pub tolerance: f64,
}

impl Default for SafeZone {
    fn default() -> Self {
        SafeZone {
            lambda: (0.1, 1.0),
            alpha: (0.5, 1.0),
            eta: (0.05, 0.2),
            tolerance: 0.15,
        }
    }
}

impl SafeZone {
    fn contains(&self, c: &SensitivityCell) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| lo <= v && v <= hi;
        inside(c.lambda, self.lambda) && inside(c.alpha, self.alpha) && inside(c.eta, self.eta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensitivityConfig {
    pub protocol: Protocol,
    pub booster: BoosterConfig,
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub etas: Vec<f64>,
    pub safe_zone: SafeZone,
    /// Drop the best and worst run before averaging each cell.
    pub trimmed: bool,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig {
            protocol: Protocol::ihdp(),
            booster: BoosterConfig::default(),
            lambdas: vec![0.01, 0.1, 1.0, 10.0],
            alphas: vec![0.5, 1.0, 2.0],
            etas: vec![0.01, 0.05, 0.1, 0.2],
            safe_zone: SafeZone::default(),
            trimmed: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCell {
    pub index: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub eta: f64,
    pub pehe_sqrt: f64,
    pub ate_error: f64,
    /// Factual outcome RMSE on the test part.
    pub rmse: Option<f64>,
    pub runs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityChecks {
    pub max_lambda: f64,
    pub max_lambda_mean_pehe: f64,
    pub unit_lambda_mean_pehe: Option<f64>,
    /// Mean PEHE over the largest-λ cells exceeds that over λ = 1 cells.
    pub degrades_at_max_lambda: Option<bool>,
    pub safe_zone_cells: usize,
    pub safe_zone_min: Option<f64>,
    pub safe_zone_max: Option<f64>,
    pub safe_zone_spread: Option<f64>,
    pub safe_zone_stable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub title: String,
    pub aggregate: String,
    /// Cells in grid order (λ outermost, then α, then η).
    pub cells: Vec<SensitivityCell>,
    /// Cell indices by increasing PEHE.
    pub ranking: Vec<usize>,
    pub checks: SensitivityChecks,
}

fn sensitivity_checks(cfg: &SensitivityConfig, cells: &[SensitivityCell]) -> SensitivityChecks {
    let max_lambda = cfg.lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let at = |lambda: f64| -> Option<f64> {
        let v: Vec<f64> = cells.iter().filter(|c| c.lambda == lambda).map(|c| c.pehe_sqrt).collect();
        (!v.is_empty()).then(|| mean(&v))
    };
    let max_mean = at(max_lambda).unwrap_or(f64::NAN);
    let unit = if max_lambda > 1.0 { at(1.0) } else { None };
    let zone: Vec<f64> = cells
        .iter()
        .filter(|c| cfg.safe_zone.contains(c))
        .map(|c| c.pehe_sqrt)
        .collect();
    let (zmin, zmax) = if zone.is_empty() {
        (None, None)
    } else {
        (
            Some(zone.iter().copied().fold(f64::INFINITY, f64::min)),
            Some(zone.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        )
    };
    let spread = zmin.zip(zmax).map(|(lo, hi)| (hi - lo) / lo);
    SensitivityChecks {
        max_lambda,
        max_lambda_mean_pehe: max_mean,
        unit_lambda_mean_pehe: unit,
        degrades_at_max_lambda: unit.map(|u| max_mean > u),
        safe_zone_cells: zone.len(),
        safe_zone_min: zmin,
        safe_zone_max: zmax,
        safe_zone_spread: spread,
        safe_zone_stable: spread.map(|s| s <= cfg.safe_zone.tolerance),
    }
}

/// Grid of `(λ, α, η)` cells, each trained on every run of the protocol.
/// Cells and runs are independent and computed in parallel; output order is
/// by cell index.
pub fn run_sensitivity(cfg: &SensitivityConfig) -> Result<SensitivityReport> {
    cfg.protocol.validate()?;
    if cfg.lambdas.is_empty() || cfg.alphas.is_empty() || cfg.etas.is_empty() {
        return Err(CbdtError::validation("sensitivity grid axes must not be empty"));
    }
    let mut grid = Vec::new();
    for &lambda in &cfg.lambdas {
        for &alpha in &cfg.alphas {
            for &eta in &cfg.etas {
                let c = BoosterConfig {
                    loss: CompositeLossParams {
                        lambda,
                        alpha,
                        ..cfg.booster.loss.clone()
                    },
                    schedule: ScheduleConfig {
                        eta,
                        ..cfg.booster.schedule.clone()
                    },
                    ..cfg.booster.clone()
                };
                c.validate()?;
                grid.push((lambda, alpha, eta, c));
            }
        }
    }
    let needed = grid.iter().any(|g| g.3.needs_nuisance());
    let runs = cfg.protocol.runs();
    // data and nuisances are shared by all cells of a run
    let prepared = par_map(runs.clone(), |run| {
        let (train, test) = cfg.protocol.split(&run)?;
        let nuisance = run_nuisance(&cfg.booster, &train, needed)?;
        Ok((train, test, nuisance))
    })?;
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|c| (0..runs.len()).map(move |r| (c, r))).collect();
    let results = par_map(jobs, |(c, r)| {
        let (train, test, nuisance) = &prepared[r];
        let model = fit_with_nuisance(&grid[c].3, train, nuisance.as_ref())?;
        let tau = model.predict_cate(test.features())?;
        let truth = test.true_cate().expect("checked by split");
        let p = pehe(&tau, &truth)?;
        let err = ate_error(mean(&tau), mean(&truth));
        let fit_rmse = match model.predict_outcome(test.features(), test.treatment()) {
            Ok(yhat) => Some(rmse(&yhat, test.outcome())?),
            Err(_) => None,
        };
        Ok((p.sqrt, err, fit_rmse))
    })?;
    let agg = |v: &[f64]| if cfg.trimmed { trimmed_mean(v) } else { mean(v) };
    let n_runs = runs.len();
    let cells: Vec<SensitivityCell> = grid
        .iter()
        .enumerate()
        .map(|(index, (lambda, alpha, eta, _))| {
            let slice = &results[index * n_runs..(index + 1) * n_runs];
            let pehes: Vec<f64> = slice.iter().map(|r| r.0).collect();
            let errs: Vec<f64> = slice.iter().map(|r| r.1).collect();
            let rmses: Option<Vec<f64>> = slice.iter().map(|r| r.2).collect();
            SensitivityCell {
                index,
                lambda: *lambda,
                alpha: *alpha,
                eta: *eta,
                pehe_sqrt: agg(&pehes),
                ate_error: agg(&errs),
                rmse: rmses.map(|v| agg(&v)),
                runs: pehes,
            }
        })
        .collect();
    let mut ranking: Vec<usize> = (0..cells.len()).collect();
    ranking.sort_by(|&a, &b| cells[a].pehe_sqrt.total_cmp(&cells[b].pehe_sqrt).then(a.cmp(&b)));
    let checks = sensitivity_checks(cfg, &cells);
    Ok(SensitivityReport {
        title: format!("Sensitivity: {}", cfg.protocol.data.describe()),
        aggregate: if cfg.trimmed { "trimmed_mean" } else { "mean" }.into(),
        cells,
        ranking,
        checks,
    })
}

pub fn render_sensitivity_text(report: &SensitivityReport, top: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", report.title);
    let _ = writeln!(s, "aggregate: {} over runs; ranked by sqrt-PEHE", report.aggregate);
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>4} {:>8} {:>6} {:>6} {:>10} {:>9} {:>9}",
        "rank", "lambda", "alpha", "eta", "sqrt-PEHE", "ATE err", "RMSE"
    );
    for (rank, &i) in report.ranking.iter().take(top).enumerate() {
        let c = &report.cells[i];
        let _ = writeln!(
            s,
            "{:>4} {:>8} {:>6} {:>6} {:>10.4} {:>9.4} {:>9}",
            rank + 1,
            c.lambda,
            c.alpha,
            c.eta,
            c.pehe_sqrt,
            c.ate_error,
            c.rmse.map_or_else(|| "n/a".into(), |r| format!("{r:.4}"))
        );
    }
    let k = &report.checks;
    let _ = writeln!(s);
    if let (Some(unit), Some(worse)) = (k.unit_lambda_mean_pehe, k.degrades_at_max_lambda) {
        let _ = writeln!(
            s,
            "lambda = {} cells: mean sqrt-PEHE {:.4}; lambda = 1 cells: {:.4}; degrades: {}",
            k.max_lambda, k.max_lambda_mean_pehe, unit, worse
        );
    }
    if let (Some(lo), Some(hi), Some(spread)) = (k.safe_zone_min, k.safe_zone_max, k.safe_zone_spread) {
        let _ = writeln!(
            s,
            "safe zone ({} cells): sqrt-PEHE in [{lo:.4}, {hi:.4}], spread {:.1}%",
            k.safe_zone_cells,
            100.0 * spread
        );
    }
    s
}

pub fn write_sensitivity_csv<W: Write>(report: &SensitivityReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell", "lambda", "alpha", "eta", "pehe_sqrt", "ate_error", "rmse", "rank"])?;
    let mut rank = vec![0; report.cells.len()];
    for (r, &i) in report.ranking.iter().enumerate() {
        rank[i] = r + 1;
    }
    for c in &report.cells {
        w.write_record([
            c.index.to_string(),
            c.lambda.to_string(),
            c.alpha.to_string(),
            c.eta.to_string(),
            c.pehe_sqrt.to_string(),
            c.ate_error.to_string(),
            c.rmse.map_or_else(String::new, |r| r.to_string()),
            rank[c.index].to_string(),
        ])?;
    }
    w.flush().map_err(|e| CbdtError::io("<csv writer>", e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverageConfig {
    pub synthetic: SyntheticSpec,
    pub outer_seeds: Vec<u64>,
    pub draws: usize,
    pub level: f64,
    pub nuisance: GbdtParams,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        CoverageConfig {
            synthetic: SyntheticSpec::default(),
            outer_seeds: (0..50).collect(),
            draws: 200,
            level: 0.95,
            nuisance: GbdtParams::default(),
        }
    }
}

/// Coverage of stratified bootstrap intervals around the cross-fitted AIPW
/// ATE. Each outer seed draws a fresh synthetic sample; the target is that
/// sample's true mean effect.
pub fn run_dr_coverage(cfg: &CoverageConfig) -> Result<CoverageResult> {
    bootstrap_coverage(&cfg.outer_seeds, cfg.draws, cfg.level, |seed| {
        let ds = generate_synthetic(&SyntheticSpec {
            seed,
            ..cfg.synthetic.clone()
        })?;
        let nm = fit_nuisance(&ds, &cfg.nuisance, seed)?;
        let scores = aipw_scores(ds.treatment(), ds.outcome(), &nm.cross_fitted)?;
        Ok(CoverageSample {
            contributions: scores,
            treatment: ds.treatment().to_vec(),
            true_ate: ds.true_ate().expect("synthetic data carries ground truth"),
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_protocol() -> Protocol {
        Protocol {
            data: DataSource::Synthetic(SyntheticSpec {
                n: 200,
                d: 3,
                ..Default::default()
            }),
            seeds: vec![1, 2, 3],
            ..Default::default()
        }
    }

    fn tiny_booster() -> BoosterConfig {
        BoosterConfig {
            num_rounds: 10,
            nuisance: GbdtParams {
                rounds: 10,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn runs_cycle_replicates() {
        let p = Protocol {
            data: DataSource::IhdpSurrogate,
            seeds: vec![5, 6, 7],
            replicates: vec![1, 2],
            ..Default::default()
        };
        let r = p.runs();
        assert_eq!(r[2], RunSpec { run: 2, seed: 7, replicate: Some(1) });
        assert_eq!(tiny_protocol().runs()[0].replicate, None);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("forest".parse::<Method>().is_err());
    }

    #[test]
    fn benchmark_structure() {
        let cfg = BenchmarkConfig {
            protocol: tiny_protocol(),
            methods: vec![Method::Cbdt, Method::X],
            booster: tiny_booster(),
            baselines: BaselineSettings {
                tune: false,
                base: GbdtParams {
                    rounds: 10,
                    ..Default::default()
                },
                nuisance: GbdtParams {
                    rounds: 10,
                    ..Default::default()
                },
                ..Default::default()
            },
            timing: TimingSettings::single(),
            coverage_draws: 20,
            ..Default::default()
        };
        let report = run_benchmark(&cfg).unwrap();
        assert_eq!(report.methods.len(), 2);
        assert_eq!(report.tests.len(), 1);
        assert_eq!(report.runs.len(), 6);
    }

    #[test]
    fn ablation_has_three_variants_besides_full() {
        let cfg = AblationConfig {
            protocol: Protocol {
                seeds: vec![1],
                ..tiny_protocol()
            },
            booster: tiny_booster(),
            coverage_draws: 20,
            ..Default::default()
        };
        let a = run_ablation(&cfg).unwrap();
        let names: Vec<&str> = a.rows.iter().map(|r| r.variant.as_str()).collect();
        assert_eq!(names, ["full", "no_variance", "no_ate", "static_schedule"]);
        assert_eq!(a.rows[0].pehe_change_pct, 0.0);
    }

    #[test]
    fn sensitivity_grid_counts_cells() {
        let cfg = SensitivityConfig {
            protocol: Protocol {
                seeds: vec![1],
                ..tiny_protocol()
            },
            booster: BoosterConfig {
                num_rounds: 3,
                ..tiny_booster()
            },
            ..Default::default()
        };
        let r = run_sensitivity(&cfg).unwrap();
        assert_eq!(r.cells.len(), 48);
        assert_eq!(r.ranking.len(), 48);
        assert_eq!(r.checks.safe_zone_cells, 2 * 2 * 3);
        assert!(r.checks.degrades_at_max_lambda.is_some());
    }

    #[test]
    fn csv_source_without_truth_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "treatment,y_factual,x1\n1,1.0,0.5\n0,0.0,0.1\n1,2.0,0.3\n0,1.0,0.2\n").unwrap();
        let p = Protocol {
            data: DataSource::Csv { path },
            seeds: vec![0],
            train_fraction: 0.5,
            ..Default::default()
        };
        let err = p.split(&p.runs()[0]).unwrap_err().to_string();
        assert!(err.contains("ground truth"), "{err}");
    }
}
