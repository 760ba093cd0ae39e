use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use cbdt::baselines::{fit_meta, MetaKind, MetaLearner, MetaLearnerSpec};
use cbdt::booster::{fit, BoostedModel, BoosterConfig, MODEL_KIND};
use cbdt::dataset::{write_csv, CausalDataset, SyntheticSpec};
use cbdt::estimator::CateEstimator;
use cbdt::evaluation::{pehe, render_text, write_runs_csv, write_summary_csv, write_tests_csv};
use cbdt::experiment::{
    render_ablation_text, render_sensitivity_text, run_ablation, run_benchmark, run_sensitivity,
    write_ablation_csv, write_sensitivity_csv, AblationConfig, BenchmarkConfig, DataSource, SensitivityConfig,
};
use cbdt::gbdt::GbdtParams;
use cbdt::rules::{extract_rules, rule_fidelity, rule_truth_check, RuleExtractionSpec};
use serde::{Deserialize, Serialize};

use crate::config::{self, Resolved};
use crate::output::{self, OutputDir};
use crate::plots;

/// Which estimator `train` fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    #[default]
    Cbdt,
    S,
    T,
    X,
    Dr,
}

impl Learner {
    fn meta_kind(self) -> Option<MetaKind> {
        match self {
            Learner::Cbdt => None,
            Learner::S => Some(MetaKind::S),
            Learner::T => Some(MetaKind::T),
            Learner::X => Some(MetaKind::X),
            Learner::Dr => Some(MetaKind::Dr),
        }
    }
}

/// Settings of the meta-learners `train` can fit instead of CBDT.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineParams {
    pub base: GbdtParams,
    pub nuisance: GbdtParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub data: DataSource,
    /// IHDP replicate number; ignored by other sources.
    pub replicate: usize,
    pub learner: Learner,
    pub booster: BoosterConfig,
    pub baseline: BaselineParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            data: DataSource::Synthetic(SyntheticSpec::default()),
            replicate: 1,
            learner: Learner::Cbdt,
            booster: BoosterConfig::default(),
            baseline: BaselineParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RulesConfig {
    /// Saved model to explain; when absent a CBDT model is trained on `data`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    pub data: DataSource,
    pub replicate: usize,
    pub booster: BoosterConfig,
    pub extraction: RuleExtractionSpec,
}

impl Default for RulesConfig {
    fn default() -> Self {
        RulesConfig {
            model: None,
            data: DataSource::Synthetic(SyntheticSpec::step_preset()),
            replicate: 1,
            booster: BoosterConfig::default(),
            extraction: RuleExtractionSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateConfig {
    pub data: DataSource,
    pub replicate: usize,
    /// Name of the CSV written inside the output directory.
    pub file_name: String,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            data: DataSource::Synthetic(SyntheticSpec::default()),
            replicate: 1,
            file_name: "data.csv".into(),
        }
    }
}

/// Load one dataset. Synthetic specs keep their own seed here.
fn load_one(source: &DataSource, replicate: usize) -> Result<CausalDataset> {
    let ds = match source {
        DataSource::Synthetic(spec) => source.load(replicate, spec.seed),
        other => other.load(replicate, 0),
    };
    ds.with_context(|| format!("loading {}", source.describe()))
}

fn open_output<T: Serialize>(command: &str, resolved: &Resolved<T>) -> Result<OutputDir> {
    let dir = output::output_dir(resolved.output_dir.clone(), command);
    let mut out = OutputDir::create(dir, command)?;
    let text = config::render(command, &resolved.config, out.root())?;
    out.write(output::CONFIG, text)?;
    Ok(out)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[derive(Serialize)]
struct FitSummary {
    learner: Learner,
    data: String,
    rows: usize,
    features: usize,
    treated: usize,
    train_time_s: f64,
    /// Mean estimated effect over the training rows.
    ate_hat: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ate_true: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pehe_sqrt_in_sample: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_ref: Option<cbdt::booster::TauRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rounds: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

pub fn train(resolved: Resolved<TrainConfig>) -> Result<PathBuf> {
    let cfg = &resolved.config;
    cfg.booster.validate()?;
    let ds = load_one(&cfg.data, cfg.replicate)?;
    let mut out = open_output("train", &resolved)?;
    let start = Instant::now();
    let (tau, mut summary) = match cfg.learner.meta_kind() {
        None => {
            let model = fit(&cfg.booster, &ds)?;
            let secs = start.elapsed().as_secs_f64();
            model.save(out.path("model.json"))?;
            out.record("model.json")?;
            out.write_with("trace.csv", |w| model.trace.write_csv(w))?;
            let tau = model.predict_cate(ds.features())?;
            let summary = FitSummary {
                learner: cfg.learner,
                data: cfg.data.describe(),
                rows: ds.n(),
                features: ds.d(),
                treated: ds.n_treated(),
                train_time_s: secs,
                ate_hat: mean(&tau),
                ate_true: None,
                pehe_sqrt_in_sample: None,
                tau_ref: Some(model.tau_ref.clone()),
                rounds: Some(model.rounds()),
                warnings: Vec::new(),
            };
            (tau, summary)
        }
        Some(kind) => {
            let spec = MetaLearnerSpec {
                base: cfg.baseline.base.clone(),
                nuisance: cfg.baseline.nuisance.clone(),
                seed: cfg.booster.seed,
                ..MetaLearnerSpec::new(kind)
            };
            let learner = fit_meta(&spec, &ds)?;
            let secs = start.elapsed().as_secs_f64();
            learner.save(out.path("model.json"))?;
            out.record("model.json")?;
            let tau = learner.predict_cate(ds.features())?;
            let warnings = learner
                .disjoint_support
                .iter()
                .map(|&j| format!("covariate {} has disjoint support across arms", ds.feature_names()[j]))
                .collect();
            let summary = FitSummary {
                learner: cfg.learner,
                data: cfg.data.describe(),
                rows: ds.n(),
                features: ds.d(),
                treated: ds.n_treated(),
                train_time_s: secs,
                ate_hat: mean(&tau),
                ate_true: None,
                pehe_sqrt_in_sample: None,
                tau_ref: None,
                rounds: None,
                warnings,
            };
            (tau, summary)
        }
    };
    if let Some(truth) = ds.true_cate() {
        summary.ate_true = Some(mean(&truth));
        summary.pehe_sqrt_in_sample = Some(pehe(&tau, &truth)?.sqrt);
    }
    out.write_json("summary.json", &summary)?;
    eprintln!(
        "trained {:?} on {} rows in {:.2}s, mean effect {:.4}",
        cfg.learner, summary.rows, summary.train_time_s, summary.ate_hat
    );
    out.finish()
}

pub fn benchmark(resolved: Resolved<BenchmarkConfig>) -> Result<PathBuf> {
    let cfg = &resolved.config;
    cfg.validate()?;
    let mut out = open_output("benchmark", &resolved)?;
    eprintln!(
        "benchmark: {} methods x {} runs on {}",
        cfg.methods.len(),
        cfg.protocol.seeds.len(),
        cfg.protocol.data.describe()
    );
    let report = run_benchmark(cfg)?;
    let text = render_text(&report);
    print!("{text}");
    out.write("report.txt", &text)?;
    out.write_json("report.json", &report)?;
    out.write_with("summary.csv", |w| write_summary_csv(&report, w))?;
    out.write_with("runs.csv", |w| write_runs_csv(&report, w))?;
    out.write_with("tests.csv", |w| write_tests_csv(&report, w))?;
    plots::tradeoff(&report, &out.path("tradeoff.svg"))?;
    out.record("tradeoff.svg")?;
    plots::metric_bars(&report, &out.path("metrics.svg"))?;
    out.record("metrics.svg")?;
    out.finish()
}

pub fn ablate(resolved: Resolved<AblationConfig>) -> Result<PathBuf> {
    let cfg = &resolved.config;
    let mut out = open_output("ablate", &resolved)?;
    eprintln!("ablation: {} runs on {}", cfg.protocol.seeds.len(), cfg.protocol.data.describe());
    let ablation = run_ablation(cfg)?;
    let text = render_ablation_text(&ablation);
    print!("{text}");
    out.write("ablation.txt", &text)?;
    out.write_json("ablation.json", &ablation)?;
    out.write_with("ablation.csv", |w| write_ablation_csv(&ablation, w))?;
    out.write_with("runs.csv", |w| write_runs_csv(&ablation.report, w))?;
    out.write_with("tests.csv", |w| write_tests_csv(&ablation.report, w))?;
    plots::ablation_bars(&ablation, &out.path("ablation.svg"))?;
    out.record("ablation.svg")?;
    out.finish()
}

pub fn sensitivity(resolved: Resolved<SensitivityConfig>) -> Result<PathBuf> {
    let cfg = &resolved.config;
    let mut out = open_output("sensitivity", &resolved)?;
    eprintln!(
        "sensitivity: {} cells x {} runs on {}",
        cfg.lambdas.len() * cfg.alphas.len() * cfg.etas.len(),
        cfg.protocol.seeds.len(),
        cfg.protocol.data.describe()
    );
    let report = run_sensitivity(cfg)?;
    let text = render_sensitivity_text(&report, 10);
    print!("{text}");
    out.write("sensitivity.txt", &text)?;
    out.write_json("sensitivity.json", &report)?;
    out.write_with("sensitivity.csv", |w| write_sensitivity_csv(&report, w))?;
    for name in plots::sensitivity_heatmaps(&report, out.root())? {
        out.record(&name)?;
    }
    out.finish()
}

enum Explained {
    Booster(BoostedModel),
    Meta(MetaLearner),
}

impl Explained {
    fn load(path: &PathBuf) -> Result<Self> {
        let kind = cbdt::persist::peek_kind(path)?;
        if kind == MODEL_KIND {
            return Ok(Explained::Booster(BoostedModel::load(path)?));
        }
        let meta = MetaKind::ALL
            .into_iter()
            .find(|k| cbdt::baselines::model_kind(*k) == kind)
            .ok_or_else(|| crate::UsageError(format!("{}: unsupported model kind {kind:?}", path.display())))?;
        Ok(Explained::Meta(MetaLearner::load(meta, path)?))
    }

    fn estimator(&self) -> &dyn CateEstimator {
        match self {
            Explained::Booster(m) => m,
            Explained::Meta(m) => m,
        }
    }
}

#[derive(Serialize)]
struct RulesSummary {
    rules: usize,
    fidelity: cbdt::rules::Fidelity,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<Vec<cbdt::rules::TruthCheck>>,
    diagnostics: Vec<String>,
}

pub fn rules(resolved: Resolved<RulesConfig>) -> Result<PathBuf> {
    let cfg = &resolved.config;
    cfg.extraction.validate()?;
    let model = match &cfg.model {
        Some(path) => Explained::load(path).with_context(|| format!("loading model {}", path.display()))?,
        None => {
            cfg.booster.validate()?;
            Explained::Booster(fit(&cfg.booster, &load_one(&cfg.data, cfg.replicate)?)?)
        }
    };
    let ds = load_one(&cfg.data, cfg.replicate)?;
    if model.estimator().n_features() != ds.d() {
        return Err(crate::UsageError(format!(
            "model expects {} covariates but the data has {}",
            model.estimator().n_features(),
            ds.d()
        ))
        .into());
    }
    let mut out = open_output("rules", &resolved)?;
    if let (None, Explained::Booster(m)) = (&cfg.model, &model) {
        m.save(out.path("model.json"))?;
        out.record("model.json")?;
    }
    let rules = extract_rules(model.estimator(), &ds, &cfg.extraction)?;
    let fidelity = rule_fidelity(&rules, model.estimator(), &ds)?;
    let truth = ds.true_cate().is_some().then(|| rule_truth_check(&rules, &ds)).transpose()?;
    let text = rules.to_text();
    print!("{text}");
    println!("fidelity {:.4} (rows covered {:.1}%)", fidelity.fidelity, 100.0 * fidelity.covered_fraction);
    out.write("rules.txt", &text)?;
    out.write_with("rules.csv", |w| rules.write_csv(w))?;
    out.write_json("rules.json", &rules)?;
    out.write_json(
        "rules_summary.json",
        &RulesSummary {
            rules: rules.rules.len(),
            fidelity,
            truth,
            diagnostics: rules.diagnostics.clone(),
        },
    )?;
    out.finish()
}

#[derive(Serialize)]
struct DataSummary {
    data: String,
    rows: usize,
    features: usize,
    treated: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    ate_true: Option<f64>,
}

pub fn generate(resolved: Resolved<GenerateConfig>) -> Result<PathBuf> {
    let cfg = &resolved.config;
    if cfg.file_name.is_empty() || cfg.file_name.contains(['/', '\\']) {
        return Err(crate::UsageError(format!("file_name must be a plain file name, got {:?}", cfg.file_name)).into());
    }
    let ds = load_one(&cfg.data, cfg.replicate)?;
    let mut out = open_output("generate-data", &resolved)?;
    write_csv(&ds, out.path(&cfg.file_name))?;
    out.record(&cfg.file_name)?;
    out.write_json(
        "data_summary.json",
        &DataSummary {
            data: cfg.data.describe(),
            rows: ds.n(),
            features: ds.d(),
            treated: ds.n_treated(),
            ate_true: ds.true_ate(),
        },
    )?;
    eprintln!("wrote {} rows to {}", ds.n(), out.path(&cfg.file_name).display());
    out.finish()
}
