//! Static SVG figures for reports.

use std::path::Path;

use anyhow::{anyhow, Result};
use cbdt::evaluation::{EvaluationReport, MethodSummary};
use cbdt::experiment::{AblationReport, SensitivityReport};
use plotters::prelude::*;

const SIZE: (u32, u32) = (720, 480);
const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

fn plot_err<E: std::fmt::Debug>(e: E) -> anyhow::Error {
    anyhow!("plotting failed: {e:?}")
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = (hi - lo).abs().max(hi.abs() * 0.1).max(1e-9);
    (lo - 0.1 * span, hi + 0.1 * span)
}

fn finite_methods(report: &EvaluationReport) -> Vec<&MethodSummary> {
    report
        .methods
        .iter()
        .filter(|m| m.pehe_sqrt.is_finite() && m.train_time_s.is_finite())
        .collect()
}

/// Training time against √PEHE; bubble area grows with the ATE error.
pub fn tradeoff(report: &EvaluationReport, path: &Path) -> Result<()> {
    let methods = finite_methods(report);
    if methods.is_empty() {
        return Ok(());
    }
    let (t_lo, t_hi) = methods
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), m| (a.min(m.train_time_s), b.max(m.train_time_s)));
    let (p_lo, p_hi) = methods
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), m| (a.min(m.pehe_sqrt), b.max(m.pehe_sqrt)));
    let max_ate = methods.iter().map(|m| m.ate_error).fold(0.0f64, f64::max).max(1e-12);
    let (t_lo, t_hi) = padded(t_lo.max(0.0), t_hi);
    let (p_lo, p_hi) = padded(p_lo, p_hi);

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Training time vs. √PEHE (bubble size: ATE error)", ("sans-serif", 18))
        .margin(16)
        .x_label_area_size(40)
        .y_label_area_size(56)
        .build_cartesian_2d(t_lo.max(0.0)..t_hi, p_lo..p_hi)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("training time (s)")
        .y_desc("√PEHE")
        .draw()
        .map_err(plot_err)?;
    for (i, m) in methods.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let radius = 4.0 + 20.0 * (m.ate_error / max_ate).sqrt();
        chart
            .draw_series(std::iter::once(Circle::new(
                (m.train_time_s, m.pehe_sqrt),
                radius as i32,
                color.mix(0.5).filled(),
            )))
            .map_err(plot_err)?;
        chart
            .draw_series(std::iter::once(Text::new(
                m.method.clone(),
                (m.train_time_s, m.pehe_sqrt),
                ("sans-serif", 14).into_font().color(&BLACK),
            )))
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

/// √PEHE (left axis) and ATE error (right axis) per method.
pub fn metric_bars(report: &EvaluationReport, path: &Path) -> Result<()> {
    let methods: Vec<&MethodSummary> = report.methods.iter().filter(|m| m.pehe_sqrt.is_finite()).collect();
    if methods.is_empty() {
        return Ok(());
    }
    let n = methods.len();
    let p_max = methods.iter().map(|m| m.pehe_sqrt).fold(0.0f64, f64::max).max(1e-9) * 1.15;
    let a_max = methods
        .iter()
        .map(|m| m.ate_error)
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.15;
    let names: Vec<String> = methods.iter().map(|m| m.method.clone()).collect();

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("√PEHE and ATE error by method", ("sans-serif", 18))
        .margin(16)
        .x_label_area_size(40)
        .y_label_area_size(56)
        .right_y_label_area_size(56)
        .build_cartesian_2d(0.0..n as f64, 0.0..p_max)
        .map_err(plot_err)?
        .set_secondary_coord(0.0..n as f64, 0.0..a_max);
    chart
        .configure_mesh()
        .disable_x_mesh()
        .x_labels(n * 2 + 1)
        .x_label_formatter(&|x| {
            let i = x.floor() as usize;
            if (x - i as f64 - 0.5).abs() < 1e-6 && i < names.len() {
                names[i].clone()
            } else {
                String::new()
            }
        })
        .y_desc("√PEHE")
        .draw()
        .map_err(plot_err)?;
    chart
        .configure_secondary_axes()
        .y_desc("ATE error")
        .draw()
        .map_err(plot_err)?;
    let left = PALETTE[0];
    let right = PALETTE[1];
    chart
        .draw_series(methods.iter().enumerate().map(|(i, m)| {
            let x = i as f64;
            Rectangle::new([(x + 0.1, 0.0), (x + 0.5, m.pehe_sqrt)], left.filled())
        }))
        .map_err(plot_err)?
        .label("√PEHE")
        .legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 10, y + 5)], left.filled()));
    chart
        .draw_secondary_series(methods.iter().enumerate().filter(|(_, m)| m.ate_error.is_finite()).map(|(i, m)| {
            let x = i as f64;
            Rectangle::new([(x + 0.5, 0.0), (x + 0.9, m.ate_error)], right.filled())
        }))
        .map_err(plot_err)?
        .label("ATE error")
        .legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 10, y + 5)], right.filled()));
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Percentage change of √PEHE relative to the full model.
pub fn ablation_bars(ablation: &AblationReport, path: &Path) -> Result<()> {
    let rows = &ablation.rows;
    if rows.is_empty() {
        return Ok(());
    }
    let n = rows.len();
    let lo = rows.iter().map(|r| r.pehe_change_pct).fold(0.0f64, f64::min);
    let hi = rows.iter().map(|r| r.pehe_change_pct).fold(0.0f64, f64::max);
    let (lo, hi) = padded(lo, hi);
    let names: Vec<String> = rows.iter().map(|r| r.variant.clone()).collect();

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("√PEHE change relative to the full model", ("sans-serif", 18))
        .margin(16)
        .x_label_area_size(40)
        .y_label_area_size(56)
        .build_cartesian_2d(0.0..n as f64, lo..hi)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .disable_x_mesh()
        .x_labels(n * 2 + 1)
        .x_label_formatter(&|x| {
            let i = x.floor() as usize;
            if (x - i as f64 - 0.5).abs() < 1e-6 && i < names.len() {
                names[i].clone()
            } else {
                String::new()
            }
        })
        .y_desc("change in √PEHE (%)")
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(rows.iter().enumerate().map(|(i, r)| {
            let x = i as f64;
            let color = if r.pehe_change_pct >= 0.0 { PALETTE[3] } else { PALETTE[2] };
            Rectangle::new([(x + 0.2, 0.0), (x + 0.8, r.pehe_change_pct)], color.filled())
        }))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

fn heat_color(v: f64, lo: f64, hi: f64) -> RGBColor {
    let t = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
    // light yellow (low) to dark red (high)
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    RGBColor(lerp(255.0, 150.0), lerp(245.0, 20.0), lerp(200.0, 30.0))
}

/// One λ × α heatmap of √PEHE per η. Returns the file names written.
pub fn sensitivity_heatmaps(report: &SensitivityReport, dir: &Path) -> Result<Vec<String>> {
    let mut lambdas: Vec<f64> = report.cells.iter().map(|c| c.lambda).collect();
    let mut alphas: Vec<f64> = report.cells.iter().map(|c| c.alpha).collect();
    let mut etas: Vec<f64> = report.cells.iter().map(|c| c.eta).collect();
    for v in [&mut lambdas, &mut alphas, &mut etas] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let finite: Vec<f64> = report.cells.iter().map(|c| c.pehe_sqrt).filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut written = Vec::new();
    for eta in etas {
        let name = format!("heatmap_eta_{eta}.svg");
        let file = dir.join(&name);
        let root = SVGBackend::new(&file, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let (nl, na) = (lambdas.len(), alphas.len());
        let mut chart = ChartBuilder::on(&root)
            .caption(format!("√PEHE over λ × α at η = {eta}"), ("sans-serif", 18))
            .margin(16)
            .x_label_area_size(40)
            .y_label_area_size(56)
            .build_cartesian_2d(0.0..nl as f64, 0.0..na as f64)
            .map_err(plot_err)?;
        let (lam, alp) = (lambdas.clone(), alphas.clone());
        chart
            .configure_mesh()
            .disable_mesh()
            .x_labels(nl * 2 + 1)
            .y_labels(na * 2 + 1)
            .x_label_formatter(&|x| centered_label(*x, &lam))
            .y_label_formatter(&|y| centered_label(*y, &alp))
            .x_desc("λ")
            .y_desc("α")
            .draw()
            .map_err(plot_err)?;
        for c in report.cells.iter().filter(|c| c.eta == eta) {
            let i = lambdas.iter().position(|v| *v == c.lambda).expect("lambda listed") as f64;
            let j = alphas.iter().position(|v| *v == c.alpha).expect("alpha listed") as f64;
            let fill = if c.pehe_sqrt.is_finite() {
                heat_color(c.pehe_sqrt, lo, hi)
            } else {
                RGBColor(200, 200, 200)
            };
            chart
                .draw_series(std::iter::once(Rectangle::new([(i, j), (i + 1.0, j + 1.0)], fill.filled())))
                .map_err(plot_err)?;
            chart
                .draw_series(std::iter::once(Text::new(
                    format!("{:.3}", c.pehe_sqrt),
                    (i + 0.35, j + 0.55),
                    ("sans-serif", 14).into_font().color(&BLACK),
                )))
                .map_err(plot_err)?;
        }
        root.present().map_err(plot_err)?;
        written.push(name);
    }
    Ok(written)
}

fn centered_label(x: f64, values: &[f64]) -> String {
    let i = x.floor() as usize;
    if (x - i as f64 - 0.5).abs() < 1e-6 && i < values.len() {
        values[i].to_string()
    } else {
        String::new()
    }
}
