//! Per-run records to summary tables. Everything here is a pure function of
//! its inputs, so identical runs give byte-identical report files.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{CbdtError, Result};
use crate::evaluation::metrics::eap;
use crate::evaluation::stats::{bonferroni_threshold, mean, mean_ci, paired_ttest, trimmed_mean};

/// One method evaluated on one (replicate, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub run: usize,
    pub seed: u64,
    pub replicate: Option<usize>,
    pub pehe_sq: f64,
    pub pehe_sqrt: f64,
    pub ate_hat: f64,
    pub ate_true: f64,
    pub ate_error: f64,
    /// Whether the run's bootstrap interval for the ATE contains the truth.
    pub covered: bool,
    pub train_time_s: f64,
    pub infer_ms_per_sample: f64,
    pub infer_ms_per_batch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub runs: usize,
    pub pehe_sqrt: f64,
    pub pehe_sqrt_ci: (f64, f64),
    pub pehe_sq: f64,
    pub ate_error: f64,
    pub ate_error_ci: (f64, f64),
    pub coverage: f64,
    pub train_time_s: f64,
    pub infer_ms_per_sample: f64,
    pub infer_ms_per_batch: f64,
    pub eap: Option<f64>,
    /// Values supplied from outside rather than measured here.
    pub external: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub a: String,
    pub b: String,
    pub t_stat: f64,
    pub p_value: f64,
    pub df: usize,
    pub degenerate: bool,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub title: String,
    pub aggregate: String,
    pub ci_level: f64,
    pub alpha: f64,
    pub bonferroni_threshold: Option<f64>,
    pub methods: Vec<MethodSummary>,
    pub tests: Vec<PairwiseTest>,
    pub runs: Vec<RunRecord>,
    pub notes: Vec<String>,
}

impl EvaluationReport {
    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportOptions {
    /// Drop the best and worst run before averaging.
    pub trimmed: bool,
    pub ci_level: f64,
    /// Family-wise significance level before the Bonferroni correction.
    pub alpha: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            trimmed: true,
            ci_level: 0.95,
            alpha: 0.05,
        }
    }
}

/// Summaries per method (in `method_order`), paired t-tests on per-run
/// sqrt-PEHE for every method pair, and Bonferroni flags.
pub fn assemble_report(
    title: &str,
    runs: &[RunRecord],
    method_order: &[String],
    options: &ReportOptions,
) -> Result<EvaluationReport> {
    let agg = |v: &[f64]| if options.trimmed { trimmed_mean(v) } else { mean(v) };
    let mut notes = Vec::new();
    let mut methods = Vec::new();
    let mut per_method: Vec<Vec<&RunRecord>> = Vec::new();
    for name in method_order {
        let mut rows: Vec<&RunRecord> = runs.iter().filter(|r| &r.method == name).collect();
        rows.sort_by_key(|r| r.run);
        if rows.is_empty() {
            return Err(CbdtError::validation(format!("no runs recorded for method {name:?}")));
        }
        let col = |f: fn(&RunRecord) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<f64>>();
        let pehe_sqrt = col(|r| r.pehe_sqrt);
        let ate_error = col(|r| r.ate_error);
        let train = agg(&col(|r| r.train_time_s));
        let batch = agg(&col(|r| r.infer_ms_per_batch));
        let pehe_value = agg(&pehe_sqrt);
        let eap_value = match eap(pehe_value, train, batch) {
            Ok(v) => Some(v),
            Err(e) => {
                notes.push(format!("{name}: {e}"));
                None
            }
        };
        methods.push(MethodSummary {
            method: name.clone(),
            runs: rows.len(),
            pehe_sqrt: pehe_value,
            pehe_sqrt_ci: mean_ci(&pehe_sqrt, options.ci_level)?,
            pehe_sq: agg(&col(|r| r.pehe_sq)),
            ate_error: agg(&ate_error),
            ate_error_ci: mean_ci(&ate_error, options.ci_level)?,
            coverage: rows.iter().filter(|r| r.covered).count() as f64 / rows.len() as f64,
            train_time_s: train,
            infer_ms_per_sample: agg(&col(|r| r.infer_ms_per_sample)),
            infer_ms_per_batch: batch,
            eap: eap_value,
            external: false,
        });
        per_method.push(rows);
    }
    let mut tests = Vec::new();
    let n_runs = per_method.first().map_or(0, Vec::len);
    let pairs = method_order.len() * method_order.len().saturating_sub(1) / 2;
    let threshold = if n_runs < 2 {
        if pairs > 0 {
            notes.push("fewer than two runs per method: pairwise t-tests omitted".into());
        }
        None
    } else if pairs == 0 {
        None
    } else {
        Some(bonferroni_threshold(options.alpha, pairs)?)
    };
    if let Some(threshold) = threshold {
        for i in 0..per_method.len() {
            for j in i + 1..per_method.len() {
                let a: Vec<f64> = per_method[i].iter().map(|r| r.pehe_sqrt).collect();
                let b: Vec<f64> = per_method[j].iter().map(|r| r.pehe_sqrt).collect();
                if a.len() != b.len() {
                    return Err(CbdtError::validation(format!(
                        "methods {} and {} have different run counts",
                        method_order[i], method_order[j]
                    )));
                }
                let t = paired_ttest(&a, &b)?;
                tests.push(PairwiseTest {
                    a: method_order[i].clone(),
                    b: method_order[j].clone(),
                    t_stat: t.t_stat,
                    p_value: t.p_value,
                    df: t.df,
                    degenerate: t.degenerate,
                    significant: t.p_value < threshold,
                });
            }
        }
    }
    let mut runs = runs.to_vec();
    runs.sort_by(|a, b| {
        let pos = |m: &str| method_order.iter().position(|x| x == m);
        (pos(&a.method), a.run).cmp(&(pos(&b.method), b.run))
    });
    Ok(EvaluationReport {
        title: title.to_string(),
        aggregate: if options.trimmed { "trimmed_mean" } else { "mean" }.into(),
        ci_level: options.ci_level,
        alpha: options.alpha,
        bonferroni_threshold: threshold,
        methods,
        tests,
        runs,
        notes,
    })
}

/// Published numbers for a system that is not run here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalResult {
    pub method: String,
    pub pehe_sqrt: f64,
    pub ate_error: f64,
    #[serde(default)]
    pub coverage: Option<f64>,
    #[serde(default)]
    pub train_time_s: Option<f64>,
    #[serde(default)]
    pub infer_ms_per_batch: Option<f64>,
}

/// Append externally supplied rows; they take no part in the t-tests.
pub fn add_external(report: &mut EvaluationReport, external: &[ExternalResult]) {
    for e in external {
        let eap_value = match (e.train_time_s, e.infer_ms_per_batch) {
            (Some(train), Some(infer)) => eap(e.pehe_sqrt, train, infer).ok(),
            _ => None,
        };
        report.methods.push(MethodSummary {
            method: e.method.clone(),
            runs: 0,
            pehe_sqrt: e.pehe_sqrt,
            pehe_sqrt_ci: (f64::NAN, f64::NAN),
            pehe_sq: e.pehe_sqrt * e.pehe_sqrt,
            ate_error: e.ate_error,
            ate_error_ci: (f64::NAN, f64::NAN),
            coverage: e.coverage.unwrap_or(f64::NAN),
            train_time_s: e.train_time_s.unwrap_or(f64::NAN),
            infer_ms_per_sample: f64::NAN,
            infer_ms_per_batch: e.infer_ms_per_batch.unwrap_or(f64::NAN),
            eap: eap_value,
            external: true,
        });
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.digits$}"))
}

/// Aligned plain-text tables.
pub fn render_text(report: &EvaluationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", report.title);
    let _ = writeln!(
        s,
        "aggregate: {} over runs; intervals: {:.0}% t-interval over runs",
        report.aggregate,
        report.ci_level * 100.0
    );
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<14} {:>5} {:>10} {:>19} {:>9} {:>9} {:>9} {:>9} {:>12} {:>12} {:>8}",
        "method", "runs", "sqrt-PEHE", "CI", "PEHE^2", "ATE err", "coverage", "train s", "infer ms", "ms/row", "EAP"
    );
    for m in &report.methods {
        let name = if m.external {
            format!("{} (ext)", m.method)
        } else {
            m.method.clone()
        };
        let _ = writeln!(
            s,
            "{:<14} {:>5} {:>10.4} {:>19} {:>9.4} {:>9.4} {:>9.2} {:>9.4} {:>12.4} {:>12.6} {:>8}",
            name,
            m.runs,
            m.pehe_sqrt,
            format!("[{:.4}, {:.4}]", m.pehe_sqrt_ci.0, m.pehe_sqrt_ci.1),
            m.pehe_sq,
            m.ate_error,
            m.coverage,
            m.train_time_s,
            m.infer_ms_per_batch,
            m.infer_ms_per_sample,
            opt(m.eap, 4),
        );
    }
    if !report.tests.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "paired t-tests on sqrt-PEHE (Bonferroni threshold {})",
            opt(report.bonferroni_threshold, 6)
        );
        let _ = writeln!(s, "{:<14} {:<14} {:>10} {:>4} {:>12} {:>12}", "a", "b", "t", "df", "p", "significant");
        for t in &report.tests {
            let _ = writeln!(
                s,
                "{:<14} {:<14} {:>10.4} {:>4} {:>12.6} {:>12}",
                t.a,
                t.b,
                t.t_stat,
                t.df,
                t.p_value,
                if t.degenerate {
                    "degenerate"
                } else if t.significant {
                    "yes"
                } else {
                    "no"
                }
            );
        }
    }
    if !report.notes.is_empty() {
        let _ = writeln!(s);
        for n in &report.notes {
            let _ = writeln!(s, "note: {n}");
        }
    }
    s
}

fn flush<W: Write>(w: csv::Writer<W>) -> Result<()> {
    let mut w = w;
    w.flush().map_err(|e| CbdtError::io("<csv writer>", e))
}

pub fn write_summary_csv<W: Write>(report: &EvaluationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "runs",
        "pehe_sqrt",
        "pehe_sqrt_lo",
        "pehe_sqrt_hi",
        "pehe_sq",
        "ate_error",
        "ate_error_lo",
        "ate_error_hi",
        "coverage",
        "train_time_s",
        "infer_ms_per_batch",
        "infer_ms_per_sample",
        "eap",
        "external",
    ])?;
    for m in &report.methods {
        w.write_record([
            m.method.clone(),
            m.runs.to_string(),
            m.pehe_sqrt.to_string(),
            m.pehe_sqrt_ci.0.to_string(),
            m.pehe_sqrt_ci.1.to_string(),
            m.pehe_sq.to_string(),
            m.ate_error.to_string(),
            m.ate_error_ci.0.to_string(),
            m.ate_error_ci.1.to_string(),
            m.coverage.to_string(),
            m.train_time_s.to_string(),
            m.infer_ms_per_batch.to_string(),
            m.infer_ms_per_sample.to_string(),
            m.eap.map_or(String::new(), |v| v.to_string()),
            m.external.to_string(),
        ])?;
    }
    flush(w)
}

pub fn write_runs_csv<W: Write>(report: &EvaluationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &report.runs {
        w.serialize(r)?;
    }
    flush(w)
}

pub fn write_tests_csv<W: Write>(report: &EvaluationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["a", "b", "t_stat", "p_value", "df", "degenerate", "significant"])?;
    for t in &report.tests {
        w.write_record([
            t.a.clone(),
            t.b.clone(),
            t.t_stat.to_string(),
            t.p_value.to_string(),
            t.df.to_string(),
            t.degenerate.to_string(),
            t.significant.to_string(),
        ])?;
    }
    flush(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(method: &str, run: usize, pehe: f64) -> RunRecord {
        RunRecord {
            method: method.into(),
            run,
            seed: run as u64,
            replicate: Some(run + 1),
            pehe_sq: pehe * pehe,
            pehe_sqrt: pehe,
            ate_hat: 4.0,
            ate_true: 4.1,
            ate_error: 0.1,
            covered: run % 2 == 0,
            train_time_s: 0.3,
            infer_ms_per_sample: 0.01,
            infer_ms_per_batch: 1.5,
        }
    }

    fn runs(n: usize) -> Vec<RunRecord> {
        let mut v = Vec::new();
        for r in 0..n {
            v.push(record("cbdt", r, 0.5 + 0.01 * r as f64));
            v.push(record("x", r, 0.7 + 0.013 * (r * r) as f64));
        }
        v
    }

    #[test]
    fn structure_for_two_methods() {
        let order = vec!["cbdt".to_string(), "x".to_string()];
        let rep = assemble_report("t", &runs(10), &order, &ReportOptions::default()).unwrap();
        assert_eq!(rep.methods.len(), 2);
        assert_eq!(rep.tests.len(), 1);
        assert_eq!(rep.bonferroni_threshold, Some(0.05));
        assert_eq!(rep.methods[0].coverage, 0.5);
        assert!(rep.methods[0].eap.is_some());
    }

    #[test]
    fn single_run_omits_tests() {
        let order = vec!["cbdt".to_string(), "x".to_string()];
        let rep = assemble_report("t", &runs(1), &order, &ReportOptions::default()).unwrap();
        assert!(rep.tests.is_empty());
        assert!(rep.notes.iter().any(|n| n.contains("omitted")));
    }

    #[test]
    fn rendering_is_pure() {
        let order = vec!["cbdt".to_string(), "x".to_string()];
        let a = assemble_report("t", &runs(5), &order, &ReportOptions::default()).unwrap();
        let mut shuffled = runs(5);
        shuffled.reverse();
        let b = assemble_report("t", &shuffled, &order, &ReportOptions::default()).unwrap();
        assert_eq!(render_text(&a), render_text(&b));
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        write_runs_csv(&a, &mut ca).unwrap();
        write_runs_csv(&b, &mut cb).unwrap();
        assert_eq!(ca, cb);
    }
}
