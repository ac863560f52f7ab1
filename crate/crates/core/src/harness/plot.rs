//! SVG learning curves.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::metrics::read_metrics;
use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 52.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// One label's curve: mean over its files and, with several files, the
/// standard deviation at every step they all logged.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub steps: Vec<u64>,
    pub mean: Vec<f64>,
    pub std: Option<Vec<f64>>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Groups files by label and aggregates them. With no labels every file
/// is its own series, named after its parent directory.
pub fn build_series(files: &[PathBuf], labels: &[String]) -> Result<Vec<Series>> {
    if files.is_empty() {
        return Err(Error::usage("plot needs at least one metrics file"));
    }
    if !labels.is_empty() && labels.len() != files.len() {
        return Err(Error::usage(format!("{} labels for {} files", labels.len(), files.len())));
    }
    let mut groups: Vec<(String, Vec<&PathBuf>)> = Vec::new();
    for (i, f) in files.iter().enumerate() {
        let label = match labels.get(i) {
            Some(l) => l.clone(),
            None => f
                .parent()
                .and_then(Path::file_name)
                .or_else(|| f.file_stem())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("run {i}")),
        };
        match groups.iter_mut().find(|(l, _)| *l == label) {
            Some((_, g)) => g.push(f),
            None => groups.push((label, vec![f])),
        }
    }
    let mut out = Vec::new();
    for (label, paths) in groups {
        let runs = paths.iter().map(|p| read_metrics(p)).collect::<Result<Vec<_>>>()?;
        let steps: Vec<u64> = runs[0]
            .iter()
            .map(|r| r.global_step)
            .filter(|s| runs[1..].iter().all(|rows| rows.iter().any(|r| r.global_step == *s)))
            .collect();
        let value_at = |rows: &[super::metrics::MetricsRow], s: u64| {
            rows.iter()
                .find(|r| r.global_step == s)
                .and_then(|r| r.mean_return)
                .unwrap_or(0.0)
        };
        let n = runs.len() as f64;
        let mut mean = Vec::with_capacity(steps.len());
        let mut std = Vec::with_capacity(steps.len());
        for &s in &steps {
            let vals: Vec<f64> = runs.iter().map(|rows| value_at(rows, s)).collect();
            let m = vals.iter().sum::<f64>() / n;
            mean.push(m);
            std.push((vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt());
        }
        out.push(Series {
            label,
            steps,
            mean,
            std: (runs.len() > 1).then_some(std),
        });
    }
    Ok(out)
}

/// Renders return-vs-step curves with optional ±1 std bands and a dashed
/// line at `optimal_return`. Labels containing "partial" are dotted.
pub fn render_svg(series: &[Series], optimal_return: Option<f64>) -> String {
    let max_step = series.iter().flat_map(|s| s.steps.iter().copied()).max().unwrap_or(1).max(1) as f64;
    let top = series
        .iter()
        .flat_map(|s| s.mean.iter().zip(s.std.iter().flatten().chain(std::iter::repeat(&0.0))).map(|(m, d)| m + d))
        .chain(optimal_return)
        .fold(1.0f64, f64::max);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x = |s: f64| MARGIN_LEFT + s / max_step * plot_w;
    let y = |v: f64| MARGIN_TOP + (1.0 - v.clamp(0.0, top) / top) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, y0, x1, y1) = (MARGIN_LEFT, MARGIN_TOP + plot_h, MARGIN_LEFT + plot_w, MARGIN_TOP);
    let _ = writeln!(svg, r#"<g class="axes" stroke="black" fill="none"><path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}"/></g>"#);
    for k in 0..=5 {
        let v = top * k as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"#,
            x0 - 6.0,
            y(v) + 4.0
        );
        let s = max_step * k as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.2}M</text>"#,
            x(s),
            y0 + 18.0,
            s / 1e6
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">environment steps</text>"#,
        x0 + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(16,{:.1}) rotate(-90)" text-anchor="middle">average return</text>"#,
        MARGIN_TOP + plot_h / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let Some(std) = &s.std {
            let mut d = String::new();
            for (k, (&st, m)) in s.steps.iter().zip(&s.mean).enumerate() {
                let _ = write!(d, "{}{:.2},{:.2} ", if k == 0 { "M" } else { "L" }, x(st as f64), y(m + std[k]));
            }
            for k in (0..s.steps.len()).rev() {
                let _ = write!(d, "L{:.2},{:.2} ", x(s.steps[k] as f64), y(s.mean[k] - std[k]));
            }
            let _ = writeln!(svg, r#"<path class="band" d="{}Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, d);
        }
        let mut d = String::new();
        for (k, (&st, m)) in s.steps.iter().zip(&s.mean).enumerate() {
            let _ = write!(d, "{}{:.2},{:.2} ", if k == 0 { "M" } else { "L" }, x(st as f64), y(*m));
        }
        let dash = if s.label.contains("partial") { r#" stroke-dasharray="2,3""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<path class="series" d="{}" fill="none" stroke="{color}" stroke-width="1.8"{dash}/>"#,
            d.trim_end()
        );
        let ly = MARGIN_TOP + 14.0 + 18.0 * i as f64;
        let lx = x1 + 14.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{ly:.1}">{}</text>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0,
            lx + 26.0,
            escape(&s.label)
        );
    }

    if let Some(opt) = optimal_return {
        let _ = writeln!(
            svg,
            r#"<line class="optimal" x1="{x0:.1}" y1="{:.2}" x2="{x1:.1}" y2="{:.2}" stroke="black" stroke-dasharray="6,4"/>"#,
            y(opt),
            y(opt)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Reads metrics files and writes the SVG chart to `out`.
pub fn emit_plot(files: &[PathBuf], labels: &[String], optimal_return: Option<f64>, out: &Path) -> Result<()> {
    let series = build_series(files, labels)?;
    std::fs::write(out, render_svg(&series, optimal_return))?;
    Ok(())
}
