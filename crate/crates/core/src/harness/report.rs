//! CSV, markdown and SVG output for a [`TrialReport`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::config::ReportFormat;
use crate::harness::experiment::{Stats, TrialReport};

/// Exponential moving average with smoothing weight `lambda` on the new
/// value: `s_t = lambda * x_t + (1 - lambda) * s_{t-1}`, seeded with `x_0`.
pub fn ema(series: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::domain(format!("EMA weight must lie in (0, 1], got {lambda}")));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut acc = None;
    for &x in series {
        let s = match acc {
            None => x,
            Some(prev) => lambda * x + (1.0 - lambda) * prev,
        };
        acc = Some(s);
        out.push(s);
    }
    Ok(out)
}

fn fmt_stats(s: &Option<Stats>) -> String {
    match s {
        Some(s) => format!("{:.4} ± {:.4}", s.mean, s.sd),
        None => "n/a".to_string(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Markdown table of test loss, train loss and gradient steps per method.
pub fn summary_markdown(report: &TrialReport) -> String {
    let mut md = String::new();
    let _ = writeln!(md, "# {} results\n", report.mode.name());
    let _ = writeln!(md, "Data: {}\n", report.data);
    if !report.rows.is_empty() {
        let _ = writeln!(md, "| Method | Runs | Failed | Test Loss ± σ | Train Loss ± σ | Median Test Loss | Gradient Steps |");
        let _ = writeln!(md, "|---|---|---|---|---|---|---|");
        for s in report.summary() {
            let median = s.test.as_ref().map(|t| format!("{:.4}", t.median)).unwrap_or_else(|| "n/a".into());
            let steps = s.gradient_steps.as_ref().map(|g| format!("{:.0}", g.mean)).unwrap_or_else(|| "n/a".into());
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} | {} |",
                s.method,
                s.runs,
                s.failures,
                fmt_stats(&s.test),
                fmt_stats(&s.train),
                median,
                steps
            );
        }
        let failed: Vec<_> = report.rows.iter().filter(|r| !r.ok()).collect();
        if !failed.is_empty() {
            let _ = writeln!(md, "\n## Failed runs\n");
            for r in failed {
                let _ = writeln!(md, "- {} seed {}: {}", r.method, r.seed, r.error.as_deref().unwrap_or(""));
            }
        }
    }
    if let Some(d) = &report.distribution {
        let _ = writeln!(md, "## Sampler check\n");
        let _ = writeln!(md, "| Quantity | Value |");
        let _ = writeln!(md, "|---|---|");
        let _ = writeln!(md, "| draws | {} |", d.draws);
        let _ = writeln!(md, "| P(factor < 1/{b}) (σ = {s}, base {b}) | {:.5} |", d.p_low, b = d.base, s = d.sigma);
        let _ = writeln!(md, "| P(factor > {b}) | {:.5} |", d.p_high, b = d.base);
        let _ = writeln!(md, "| Φ(−1/σ) | {:.5} |", d.expected_tail);
        let _ = writeln!(md, "| base 2: P(< 1/2), P(> 2) | {:.5}, {:.5} |", d.base2_p_low, d.base2_p_high);
        let _ = writeln!(md, "| initial lr: median, sd of log10 | {:.4}, {:.4} |", d.init_lr_log10_median, d.init_lr_log10_sd);
        let _ = writeln!(md, "| initial reg: median, sd of log10 | {:.4}, {:.4} |", d.init_reg_log10_median, d.init_reg_log10_sd);
    }
    md
}

/// Per-method line plot of EMA-smoothed CV loss against cumulative
/// gradient steps, using the first successful seed of each method.
pub fn convergence_svg(report: &TrialReport, lambda: f64) -> Result<String> {
    const W: f64 = 720.0;
    const H: f64 = 420.0;
    const PAD: f64 = 50.0;
    const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
    let mut series = Vec::new();
    for method in report.methods() {
        if let Some(row) = report.rows_for(&method).find(|r| r.ok() && !r.trace.is_empty()) {
            let losses: Vec<f64> = row.trace.iter().map(|p| p.1).collect();
            let smooth = ema(&losses, lambda)?;
            let pts: Vec<(f64, f64)> = row.trace.iter().zip(smooth).map(|(p, s)| (p.0 as f64, s)).collect();
            series.push((method.clone(), pts));
        }
    }
    let all = series.iter().flat_map(|(_, p)| p.iter()).filter(|p| p.1.is_finite());
    let (mut x_max, mut y_min, mut y_max) = (1.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if !y_min.is_finite() {
        (y_min, y_max) = (0.0, 1.0);
    }
    if y_max - y_min < 1e-12 {
        y_max = y_min + 1.0;
    }
    let sx = |x: f64| PAD + x / x_max * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y_min) / (y_max - y_min) * (H - 2.0 * PAD);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{PAD},{PAD} V{b} H{r}" stroke="black" fill="none"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">gradient steps (max {x_max})</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(svg, r#"<text x="10" y="{}">{y_max:.3}</text>"#, PAD);
    let _ = writeln!(svg, r#"<text x="10" y="{}">{y_min:.3}</text>"#, H - PAD);
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let d: Vec<String> = pts
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(svg, r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, d.join(" "));
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#,
            W - PAD - 170.0,
            PAD + 16.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn write_csvs(report: &TrialReport, dir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join("results.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "method",
        "seed",
        "test_loss",
        "train_loss",
        "test_accuracy",
        "cv_loss",
        "gradient_steps",
        "expected_steps",
        "learning_rate",
        "regularization_rate",
        "error",
    ])?;
    for r in &report.rows {
        w.write_record([
            r.method.clone(),
            r.seed.to_string(),
            opt(r.test_loss),
            opt(r.train_loss),
            opt(r.test_accuracy),
            opt(r.cv_loss),
            r.gradient_steps.to_string(),
            r.expected_steps.to_string(),
            opt(r.learning_rate),
            opt(r.regularization_rate),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("traces.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["method", "seed", "gradient_steps", "cv_loss"])?;
    for r in &report.rows {
        for (step, loss) in &r.trace {
            w.write_record([r.method.clone(), r.seed.to_string(), step.to_string(), loss.to_string()])?;
        }
    }
    w.flush()?;
    written.push(path);
    Ok(())
}

/// Writes the requested formats into `dir` (created if missing) and returns
/// the paths written.
pub fn write_report(report: &TrialReport, dir: &Path, formats: &[ReportFormat], ema_weight: f64) -> Result<Vec<PathBuf>> {
    if report.rows.is_empty() && report.distribution.is_none() {
        return Err(Error::domain("report has no rows to write"));
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            ReportFormat::Csv => write_csvs(report, dir, &mut written)?,
            ReportFormat::Markdown => {
                let path = dir.join("summary.md");
                fs::write(&path, summary_markdown(report))?;
                written.push(path);
            }
            ReportFormat::Svg if !report.rows.is_empty() => {
                let path = dir.join("convergence.svg");
                fs::write(&path, convergence_svg(report, ema_weight)?)?;
                written.push(path);
            }
            ReportFormat::Svg => {}
        }
    }
    Ok(written)
}
