//! Acceptance checks, one line per criterion:
//! `criterion N: PASS|FAIL (<seconds>s, budget <seconds>s) <details>`.
//!
//! The long-running checks (IHDP benchmark, ablation, coverage,
//! sensitivity grid) use full sizes only in optimized builds:
//!
//! ```text
//! cargo test --release -p cbdt --test acceptance
//! ```
//!
//! Debug builds (as in a plain `cargo test`) run them on reduced sizes and
//! mark the lines `(quick)`; such lines are smoke checks, not acceptance
//! evidence. `CBDT_ACCEPTANCE_QUICK=0|1` overrides the choice.
//!
//! The process exits 0 after printing every line. With
//! `CBDT_ACCEPTANCE_STRICT=1` it exits 1 if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use cbdt::booster::{fit, BoosterConfig};
use cbdt::dataset::{generate_synthetic, CausalDataset, SyntheticSpec};
use cbdt::evaluation::{bonferroni, bonferroni_threshold, eap, paired_ttest};
use cbdt::experiment::{
    run_ablation, run_benchmark, run_dr_coverage, run_sensitivity, AblationConfig, BenchmarkConfig, CoverageConfig,
    Method, Protocol, SensitivityConfig,
};
use cbdt::gbdt::{fit_gbdt, fit_tree, GbdtParams, GradHess, Node, Objective, RegressionTree, TreeParams};
use cbdt::matrix::Matrix;
use cbdt::objective::{loss_grad_hess, term_grad_hess, CompositeLossParams, LossTerm};
use cbdt::rules::{extract_rules, rule_fidelity, RuleExtractionSpec};
use cbdt::schedule::{ScheduleConfig, ScheduleMode, SchedulerState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn quick() -> bool {
    match std::env::var("CBDT_ACCEPTANCE_QUICK") {
        Ok(v) if !v.is_empty() => v != "0",
        _ => cfg!(debug_assertions),
    }
}

fn strict() -> bool {
    std::env::var("CBDT_ACCEPTANCE_STRICT").is_ok_and(|v| !v.is_empty() && v != "0")
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------------------------------------------------------------- 1

/// Composite loss with the per-arm means of the variance term held fixed.
fn frozen_loss(yhat: &[f64], y: &[f64], t: &[u8], p: &CompositeLossParams, frozen: (f64, f64)) -> f64 {
    let n = yhat.len() as f64;
    let (mut st, mut sc, mut nt, mut nc) = (0.0, 0.0, 0.0, 0.0);
    let (mut vt, mut vc) = (0.0, 0.0);
    let mut mse = 0.0;
    for i in 0..yhat.len() {
        mse += (yhat[i] - y[i]).powi(2);
        if t[i] == 1 {
            st += yhat[i];
            nt += 1.0;
            vt += (yhat[i] - frozen.0).powi(2);
        } else {
            sc += yhat[i];
            nc += 1.0;
            vc += (yhat[i] - frozen.1).powi(2);
        }
    }
    let mean_all = (st + sc) / n;
    let ybar = y.iter().sum::<f64>() / n;
    let ate = st / nt - sc / nc;
    let parts = [
        mse,
        p.lambda * (vt / nt + vc / nc),
        p.gamma * (mean_all - ybar).powi(2),
        p.alpha * (ate - p.tau_ref).powi(2),
    ];
    parts.iter().sum()
}

fn arm_means(yhat: &[f64], t: &[u8]) -> (f64, f64) {
    let (mut st, mut sc, mut nt, mut nc) = (0.0, 0.0, 0.0, 0.0);
    for (v, a) in yhat.iter().zip(t) {
        if *a == 1 {
            st += v;
            nt += 1.0;
        } else {
            sc += v;
            nc += 1.0;
        }
    }
    (st / nt, sc / nc)
}

fn only(term: LossTerm, p: &CompositeLossParams) -> CompositeLossParams {
    CompositeLossParams {
        lambda: if term == LossTerm::IntraGroupVariance { p.lambda } else { 0.0 },
        gamma: if term == LossTerm::GlobalCalibration { p.gamma } else { 0.0 },
        alpha: if term == LossTerm::AteCalibration { p.alpha } else { 0.0 },
        ..p.clone()
    }
}

/// Finite differences of `frozen_loss` for the terms enabled in `p`, minus
/// the MSE term when `with_mse` is false.
fn fd_gradient(yhat: &[f64], y: &[f64], t: &[u8], p: &CompositeLossParams, with_mse: bool) -> Vec<f64> {
    // The loss is quadratic in each coordinate with the arm means frozen, so a
    // central difference is exact up to rounding at any step size.
    let step = 1e-3;
    let frozen = arm_means(yhat, t);
    let mut out = Vec::with_capacity(yhat.len());
    let mut probe = yhat.to_vec();
    for i in 0..yhat.len() {
        probe[i] = yhat[i] + step;
        let up = frozen_loss(&probe, y, t, p, frozen) - if with_mse { 0.0 } else { sq_err(&probe, y) };
        probe[i] = yhat[i] - step;
        let down = frozen_loss(&probe, y, t, p, frozen) - if with_mse { 0.0 } else { sq_err(&probe, y) };
        probe[i] = yhat[i];
        out.push((up - down) / (2.0 * step));
    }
    out
}

fn sq_err(yhat: &[f64], y: &[f64]) -> f64 {
    yhat.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum()
}

fn max_rel_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let scale = x.abs().max(y.abs());
            if scale < 1e-12 {
                0.0
            } else {
                (x - y).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for _config in 0..5 {
        let p = CompositeLossParams {
            lambda: rng.random_range(0.1..5.0),
            gamma: rng.random_range(0.1..5.0),
            alpha: rng.random_range(0.1..5.0),
            tau_ref: rng.random_range(-2.0..2.0),
            exact_chain_gradients: false,
        };
        for _point in 0..10 {
            let n = 20;
            let t: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let yhat: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            for term in LossTerm::ALL {
                let analytic = term_grad_hess(term, &yhat, &y, &t, &p).map_err(err)?;
                let fd = if term == LossTerm::Mse {
                    let zero = only(LossTerm::Mse, &p);
                    fd_gradient(&yhat, &y, &t, &zero, true)
                } else {
                    fd_gradient(&yhat, &y, &t, &only(term, &p), false)
                };
                worst = worst.max(max_rel_error(&analytic.g, &fd));
                checks += 1;
            }
            let full = loss_grad_hess(&yhat, &y, &t, &p).map_err(err)?;
            worst = worst.max(max_rel_error(&full.g, &fd_gradient(&yhat, &y, &t, &p, true)));
            checks += 1;
        }
    }
    Ok((worst < 1e-6, format!("{checks} gradient checks, max relative error {worst:.2e}")))
}

// ---------------------------------------------------------------- 2

/// Best split of `rows` by enumeration: features ascending, thresholds
/// ascending, first strict maximum.
fn brute_force_split(x: &Matrix, gh: &GradHess, rows: &[usize], p: &TreeParams) -> Option<(usize, f64, f64)> {
    let (g, h): (f64, f64) = rows.iter().fold((0.0, 0.0), |a, &r| (a.0 + gh.g[r], a.1 + gh.h[r]));
    let score = |g: f64, h: f64| g * g / (h + p.split_reg_lambda);
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..x.cols() {
        let mut values: Vec<f64> = rows.iter().map(|&r| x.get(r, f)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let left: Vec<usize> = rows.iter().copied().filter(|&r| x.get(r, f) <= w[0]).collect();
            let n_left = left.len();
            if n_left < p.min_samples_leaf || rows.len() - n_left < p.min_samples_leaf {
                continue;
            }
            let (gl, hl) = left.iter().fold((0.0, 0.0), |a, &r| (a.0 + gh.g[r], a.1 + gh.h[r]));
            let gain = 0.5 * (score(gl, hl) + score(g - gl, h - hl) - score(g, h)) - p.leaf_penalty_gamma;
            if best.is_none_or(|b| gain > b.2) {
                best = Some((f, 0.5 * (w[0] + w[1]), gain));
            }
        }
    }
    best
}

fn node_gain(x: &Matrix, gh: &GradHess, rows: &[usize], p: &TreeParams, f: usize, th: f64) -> (f64, usize) {
    let (g, h): (f64, f64) = rows.iter().fold((0.0, 0.0), |a, &r| (a.0 + gh.g[r], a.1 + gh.h[r]));
    let score = |g: f64, h: f64| g * g / (h + p.split_reg_lambda);
    let left: Vec<usize> = rows.iter().copied().filter(|&r| x.get(r, f) <= th).collect();
    let (gl, hl) = left.iter().fold((0.0, 0.0), |a, &r| (a.0 + gh.g[r], a.1 + gh.h[r]));
    (0.5 * (score(gl, hl) + score(g - gl, h - hl) - score(g, h)) - p.leaf_penalty_gamma, left.len())
}

fn check_node(
    tree: &RegressionTree,
    node: usize,
    depth: usize,
    rows: Vec<usize>,
    x: &Matrix,
    gh: &GradHess,
    p: &TreeParams,
    stats: &mut (usize, usize, Vec<String>, usize),
) {
    match &tree.nodes[node] {
        Node::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } => {
            stats.0 += 1;
            match brute_force_split(x, gh, &rows, p) {
                Some((f, th, gain)) if f == *feature && th == *threshold && gain > 0.0 => {}
                // Ties (typically identical partitions on different features) are
                // decided by floating-point summation order; accept equal gain.
                Some((_, _, gain))
                    if gain > 0.0
                        && (node_gain(x, gh, &rows, p, *feature, *threshold).0 - gain).abs()
                            <= 1e-9 * gain.abs().max(1.0) =>
                {
                    stats.3 += 1
                }
                other => stats.2.push(format!(
                    "node {node}: tree ({feature}, {threshold}) vs brute force {other:?}; rows {} tree-split gain {:?}",
                    rows.len(), node_gain(x, gh, &rows, p, *feature, *threshold)
                )),
            }
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x.get(i, *feature) <= *threshold);
            check_node(tree, *left, depth + 1, l, x, gh, p, stats);
            check_node(tree, *right, depth + 1, r, x, gh, p, stats);
        }
        Node::Leaf { .. } => {
            stats.1 += 1;
            if depth < p.max_depth && rows.len() >= 2 * p.min_samples_leaf {
                if let Some((f, th, gain)) = brute_force_split(x, gh, &rows, p) {
                    if gain > 0.0 {
                        stats.2.push(format!("leaf {node}: missed split ({f}, {th}) with gain {gain}"));
                    }
                }
            }
        }
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut stats = (0, 0, Vec::new(), 0);
    for _ in 0..20 {
        let n = rng.random_range(20..=200);
        let d = rng.random_range(1..=5);
        let data: Vec<f64> = (0..n * d)
            .map(|_| if rng.random_bool(0.3) { rng.random_range(0..6) as f64 } else { rng.random_range(-2.0..2.0) })
            .collect();
        let x = Matrix::new(n, d, data).map_err(err)?;
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let h: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let gh = GradHess::new(g, h).map_err(err)?;
        let p = TreeParams {
            max_depth: rng.random_range(1..=4),
            min_samples_leaf: rng.random_range(1..=5),
            split_reg_lambda: if rng.random_bool(0.5) { 0.0 } else { 1.0 },
            leaf_penalty_gamma: if rng.random_bool(0.5) { 0.0 } else { 0.1 },
            ..Default::default()
        };
        let tree = fit_tree(&x, &gh, &p).map_err(err)?;
        check_node(&tree, 0, 0, (0..n).collect(), &x, &gh, &p, &mut stats);
    }
    let (internal, leaves, mismatches, ties) = stats;
    let detail = format!(
        "20 datasets, {internal} internal nodes ({ties} exact-gain ties) and {leaves} leaves checked, {} mismatches{}",
        mismatches.len(),
        mismatches.first().map_or(String::new(), |m| format!(" (first: {m})"))
    );
    Ok((mismatches.is_empty() && internal > 0, detail))
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let cbdt = eap(0.5504, 0.3300, 1.8).map_err(err)?;
    let xl = eap(0.6695, 0.9686, 12.8).map_err(err)?;
    let ok = (cbdt - 0.1707).abs() <= 0.001 && (xl - 0.3509).abs() <= 0.001;
    Ok((ok, format!("CBDT EAP {cbdt:.4} (published 0.1707), X-learner EAP {xl:.4} (published 0.3509)")))
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let mut cfg = BenchmarkConfig {
        methods: vec![Method::Cbdt, Method::X, Method::CbdtOracle],
        ..Default::default()
    };
    if quick() {
        cfg.protocol.seeds = vec![0, 1, 2];
    }
    let report = run_benchmark(&cfg).map_err(err)?;
    let get = |m: &str| report.method(m).map(|s| s.pehe_sqrt).ok_or(format!("{m} missing from report"));
    let (cbdt, x, oracle) = (get("cbdt")?, get("x")?, get("cbdt_oracle")?);
    let ok = cbdt <= 0.75 && cbdt < x;
    Ok((
        ok,
        format!(
            "{} runs on {}, {}: sqrt-PEHE cbdt {cbdt:.3}, x {x:.3} (cbdt with true-ATE reference {oracle:.3})",
            cfg.protocol.seeds.len(),
            cfg.protocol.data.describe(),
            report.aggregate
        ),
    ))
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let mut cfg = AblationConfig::default();
    if quick() {
        cfg.protocol.seeds = vec![0, 1, 2];
        if let cbdt::experiment::DataSource::Synthetic(s) = &mut cfg.protocol.data {
            s.n = 600;
        }
    }
    let a = run_ablation(&cfg).map_err(err)?;
    let full = a.rows[0].pehe_sqrt;
    let ok = a.rows[1..].iter().all(|r| r.pehe_sqrt >= full);
    let parts: Vec<String> = a
        .rows
        .iter()
        .map(|r| format!("{} {:.4} ({:+.2}%)", r.variant, r.pehe_sqrt, r.pehe_change_pct))
        .collect();
    Ok((ok, format!("{} sqrt-PEHE: {}", a.report.aggregate, parts.join(", "))))
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut s = SchedulerState::new(ScheduleConfig::default(), 1.0, 1.0).map_err(err)?;
    let mut violations = 0;
    for _ in 0..10_000 {
        let (l, a) = (s.lambda_k, s.alpha_k);
        let var = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..0.01) };
        s.step(var).map_err(err)?;
        if s.lambda_k > l || s.alpha_k > a || s.lambda_k < 0.0 || s.alpha_k < 0.0 {
            violations += 1;
        }
    }
    let decay = ScheduleConfig {
        mode: ScheduleMode::Decay,
        ..Default::default()
    };
    let mut d = SchedulerState::new(decay, 1.7, 0.4).map_err(err)?;
    let mut max_dev: f64 = 0.0;
    for k in 1..=1_000_000usize {
        d.step(rng.random_range(0.0..10.0)).map_err(err)?;
        if k % 997 == 0 || k <= 100 || k == 1_000_000 {
            let root = (k as f64).sqrt();
            max_dev = max_dev.max((d.lambda_k - 1.7 / root).abs()).max((d.alpha_k - 0.4 / root).abs());
        }
    }
    Ok((
        violations == 0 && max_dev <= 1e-12,
        format!(
            "dynamic: {violations} monotonicity violations in 10^4 steps (final lambda {:.3e}); decay: max deviation from lambda_0/sqrt(k) {max_dev:.1e} up to k = 10^6",
            s.lambda_k
        ),
    ))
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let mut cfg = CoverageConfig::default();
    if quick() {
        cfg.outer_seeds = (0..10).collect();
        cfg.synthetic.n = 600;
    }
    let r = run_dr_coverage(&cfg).map_err(err)?;
    let covered = r.intervals.iter().filter(|i| i.3).count();
    Ok((
        r.coverage >= 0.9,
        format!(
            "{covered}/{} outer seeds covered ({:.0}%), n = {}, {} draws, level {}",
            r.intervals.len(),
            100.0 * r.coverage,
            cfg.synthetic.n,
            r.draws,
            r.level
        ),
    ))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for (seed, n) in [(1u64, 200usize), (2, 350), (3, 500)] {
        let ds = generate_synthetic(&SyntheticSpec {
            n,
            d: 4,
            seed,
            ..Default::default()
        })
        .map_err(err)?;
        let tree = TreeParams {
            split_reg_lambda: 0.0,
            ..Default::default()
        };
        let cfg = BoosterConfig {
            num_rounds: 25,
            loss: CompositeLossParams {
                lambda: 0.0,
                gamma: 0.0,
                alpha: 0.0,
                ..Default::default()
            },
            schedule: ScheduleConfig {
                mode: ScheduleMode::Static,
                ..Default::default()
            },
            tree: tree.clone(),
            ..Default::default()
        };
        let model = fit(&cfg, &ds).map_err(err)?;
        let plain = plain_gbdt(&ds, &cfg)?;
        for (k, (a, b)) in model.outcome_trees.iter().zip(&plain.trees).enumerate() {
            checked += 1;
            if !a.same_structure(b) {
                mismatches.push(format!("n={n} tree {k}"));
            }
        }
        if model.outcome_trees.len() != plain.trees.len() {
            mismatches.push(format!("n={n}: tree counts differ"));
        }
    }
    Ok((
        mismatches.is_empty() && checked > 0,
        format!("{checked} tree pairs compared on n = 200/350/500, {} structural mismatches", mismatches.len()),
    ))
}

fn plain_gbdt(ds: &CausalDataset, cfg: &BoosterConfig) -> Result<cbdt::gbdt::GbdtModel, String> {
    let xa = ds.features().prepend_column(&ds.treatment_f64()).map_err(err)?;
    let params = GbdtParams {
        rounds: cfg.num_rounds,
        learning_rate: cfg.learning_rate,
        tree: cfg.tree.clone(),
    };
    fit_gbdt(&xa, ds.outcome(), &params, Objective::SquaredError).map_err(err)
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let spec = RuleExtractionSpec::default();
    let step = SyntheticSpec::step_preset();
    let ds = generate_synthetic(&step).map_err(err)?;
    let model = fit(&BoosterConfig::default(), &ds).map_err(err)?;
    let rules = extract_rules(&model, &ds, &spec).map_err(err)?;
    let fidelity = rule_fidelity(&rules, &model, &ds).map_err(err)?.fidelity;
    let breakpoint = rules
        .rules
        .iter()
        .flat_map(|r| &r.conditions)
        .filter(|c| c.feature == 0)
        .map(|c| c.threshold)
        .min_by(|a, b| (a - 0.5).abs().total_cmp(&(b - 0.5).abs()));
    let step_ok = breakpoint.is_some_and(|b| (b - 0.5).abs() <= 0.1) && fidelity >= 0.99;

    let constant = SyntheticSpec::constant_preset();
    let cds = generate_synthetic(&constant).map_err(err)?;
    let cmodel = fit(&BoosterConfig::default(), &cds).map_err(err)?;
    let crules = extract_rules(&cmodel, &cds, &spec).map_err(err)?;
    let effects: Vec<f64> = crules.rules.iter().map(|r| r.effect_estimate).collect();
    let lo = effects.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = effects.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tau = cmodel.predict_cate(cds.features()).map_err(err)?;
    let mean_tau = tau.iter().sum::<f64>() / tau.len() as f64;
    let sd_tau = (tau.iter().map(|t| (t - mean_tau).powi(2)).sum::<f64>() / tau.len() as f64).sqrt();
    let constant_ok = effects.len() == 1 && (effects[0] - 2.0).abs() <= 0.2;
    Ok((
        step_ok && constant_ok,
        format!(
            "step: {} rules, breakpoint {} (true 0.5), fidelity {fidelity:.4}; constant: {} rules with effects in [{lo:.2}, {hi:.2}] (truth 2.0), model effect sd {sd_tau:.3}",
            rules.rules.len(),
            breakpoint.map_or("none".into(), |b| format!("{b:.3}")),
            effects.len()
        ),
    ))
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Outcome {
    let t = paired_ttest(&[1.0, 2.0, 3.0, 4.0], &[2.0, 3.0, 4.0, 6.0]).map_err(err)?;
    let threshold = bonferroni_threshold(0.05, 6).map_err(err)?;
    let flags = bonferroni(&[0.009, 0.008], 6, 0.05).map_err(err)?;
    let ok = t.t_stat == -5.0
        && t.df == 3
        && (t.p_value - 0.015392438073302296).abs() < 1e-10
        && (threshold - 0.05 / 6.0).abs() < 1e-15
        && format!("{threshold:.6}") == "0.008333"
        && flags == [false, true];
    Ok((
        ok,
        format!(
            "t = {}, df = {}, p = {:.6}; Bonferroni threshold {threshold:.6}; p = 0.009 significant: {}",
            t.t_stat, t.df, t.p_value, flags[0]
        ),
    ))
}

// ---------------------------------------------------------------- 11

fn criterion_11() -> Outcome {
    let mut cfg = SensitivityConfig::default();
    if quick() {
        cfg.protocol = Protocol {
            seeds: vec![0, 1, 2],
            ..cfg.protocol
        };
        cfg.booster.num_rounds = 100;
    }
    let r = run_sensitivity(&cfg).map_err(err)?;
    let k = &r.checks;
    let ok = k.degrades_at_max_lambda == Some(true) && k.safe_zone_stable == Some(true);
    Ok((
        ok,
        format!(
            "{} cells x {} runs on {}: mean sqrt-PEHE lambda=10 {:.4} vs lambda=1 {:.4}; safe zone ({} cells) spread {:.2}%",
            r.cells.len(),
            cfg.protocol.seeds.len(),
            cfg.protocol.data.describe(),
            k.max_lambda_mean_pehe,
            k.unit_lambda_mean_pehe.unwrap_or(f64::NAN),
            k.safe_zone_cells,
            100.0 * k.safe_zone_spread.unwrap_or(f64::NAN)
        ),
    ))
}

fn main() -> ExitCode {
    let filter: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let criteria: [(usize, f64, fn() -> Outcome); 11] = [
        (1, 5.0, criterion_1),
        (2, 30.0, criterion_2),
        (3, 1.0, criterion_3),
        (4, 900.0, criterion_4),
        (5, 600.0, criterion_5),
        (6, 5.0, criterion_6),
        (7, 600.0, criterion_7),
        (8, 60.0, criterion_8),
        (9, 120.0, criterion_9),
        (10, 1.0, criterion_10),
        (11, 2700.0, criterion_11),
    ];
    // criteria whose sizes shrink in quick mode
    let reduced = [4, 5, 7, 11];
    let mut failed = 0;
    for (id, budget, check) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass && secs <= budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        let tag = if quick() && reduced.contains(&id) { " (quick)" } else { "" };
        println!(
            "criterion {id}: {}{tag} ({secs:.1}s, budget {budget:.0}s) {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!("{failed} of the selected criteria failed");
    if failed == 0 || !strict() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
