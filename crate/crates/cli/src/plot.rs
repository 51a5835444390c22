//! Static SVG plots for the scenario outputs: log-log line/scatter plots and
//! angular histograms. Plotting is strictly downstream of the CSVs — a plot
//! failure never affects the data files.

use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum PlotError {
    Io(std::io::Error),
    Parse(String),
}

impl std::fmt::Display for PlotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlotError::Io(e) => write!(f, "plot io error: {e}"),
            PlotError::Parse(m) => write!(f, "plot parse error: {m}"),
        }
    }
}

impl std::error::Error for PlotError {}

impl From<std::io::Error> for PlotError {
    fn from(e: std::io::Error) -> Self {
        PlotError::Io(e)
    }
}

type Result<T> = std::result::Result<T, PlotError>;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 64.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn axis_transform(lo: f64, hi: f64, log: bool) -> impl Fn(f64) -> f64 {
    let (a, b) = if log {
        (lo.log10(), hi.log10())
    } else {
        (lo, hi)
    };
    let span = if (b - a).abs() < 1e-300 { 1.0 } else { b - a };
    move |v: f64| {
        let t = if log { v.log10() } else { v };
        (t - a) / span
    }
}

fn ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let (a, b) = (lo.log10().floor() as i32, hi.log10().ceil() as i32);
        (a..=b).map(|e| 10f64.powi(e)).collect()
    } else {
        let span = hi - lo;
        if span <= 0.0 {
            return vec![lo];
        }
        (0..=4).map(|i| lo + span * i as f64 / 4.0).collect()
    }
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.0e}")
    } else {
        format!("{v}")
    }
}

/// Line/scatter plot. Log axes skip non-positive values.
pub fn line_plot(series: &[Series], title: &str, x_log: bool, y_log: bool) -> String {
    line_plot_opts(series, title, x_log, y_log, true)
}

/// As [`line_plot`], optionally without connecting lines (pure scatter).
pub fn line_plot_opts(
    series: &[Series],
    title: &str,
    x_log: bool,
    y_log: bool,
    draw_lines: bool,
) -> String {
    let mut pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().cloned())
        .filter(|(x, y)| {
            x.is_finite() && y.is_finite() && (!x_log || *x > 0.0) && (!y_log || *y > 0.0)
        })
        .collect();
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"26\" text-anchor=\"middle\" font-size=\"15\" \
         font-family=\"sans-serif\">{title}</text>\n",
        W / 2.0
    ));
    // frame
    svg.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" \
         stroke=\"black\"/>\n",
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    ));
    if pts.is_empty() {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" \
             font-family=\"sans-serif\" fill=\"#888\">no data</text>\n</svg>\n",
            W / 2.0,
            H / 2.0
        ));
        return svg;
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (x_lo, x_hi) = (
        pts.iter().map(|p| p.0).fold(f64::MAX, f64::min),
        pts.iter().map(|p| p.0).fold(f64::MIN, f64::max),
    );
    let (y_lo, y_hi) = (
        pts.iter().map(|p| p.1).fold(f64::MAX, f64::min),
        pts.iter().map(|p| p.1).fold(f64::MIN, f64::max),
    );
    let tx = axis_transform(x_lo, x_hi, x_log);
    let ty = axis_transform(y_lo, y_hi, y_log);
    let px = |x: f64| MARGIN + tx(x) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - ty(y) * (H - 2.0 * MARGIN);

    for t in ticks(x_lo, x_hi, x_log) {
        if t < x_lo * 0.999 || t > x_hi * 1.001 {
            continue;
        }
        let x = px(t);
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"#ccc\"/>\n\
             <text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\" \
             font-family=\"sans-serif\">{}</text>\n",
            MARGIN,
            H - MARGIN,
            H - MARGIN + 18.0,
            fmt_tick(t)
        ));
    }
    for t in ticks(y_lo, y_hi, y_log) {
        if t < y_lo * 0.999 || t > y_hi * 1.001 {
            continue;
        }
        let y = py(t);
        svg.push_str(&format!(
            "<line x1=\"{MARGIN}\" y1=\"{y:.1}\" x2=\"{}\" y2=\"{y:.1}\" stroke=\"#ccc\"/>\n\
             <text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"11\" \
             font-family=\"sans-serif\">{}</text>\n",
            W - MARGIN,
            MARGIN - 6.0,
            y + 4.0,
            fmt_tick(t)
        ));
    }
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let valid: Vec<(f64, f64)> = s
            .points
            .iter()
            .cloned()
            .filter(|(x, y)| {
                x.is_finite() && y.is_finite() && (!x_log || *x > 0.0) && (!y_log || *y > 0.0)
            })
            .collect();
        if draw_lines && valid.len() > 1 {
            let path: Vec<String> = valid
                .iter()
                .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
                .collect();
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                path.join(" ")
            ));
        }
        for (x, y) in &valid {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                px(*x),
                py(*y)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" font-family=\"sans-serif\" \
             fill=\"{color}\">{}</text>\n",
            W - MARGIN + 6.0,
            MARGIN + 16.0 * (i as f64 + 1.0),
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Histogram of angles (or any scalar) as vertical bars.
pub fn histogram(values: &[f64], bins: usize, title: &str, range: Option<(f64, f64)>) -> String {
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"26\" text-anchor=\"middle\" font-size=\"15\" \
         font-family=\"sans-serif\">{title}</text>\n",
        W / 2.0
    ));
    svg.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" \
         stroke=\"black\"/>\n",
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    ));
    if values.is_empty() || bins == 0 {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" \
             font-family=\"sans-serif\" fill=\"#888\">no data</text>\n</svg>\n",
            W / 2.0,
            H / 2.0
        ));
        return svg;
    }
    let (lo, hi) = range.unwrap_or_else(|| {
        (
            values.iter().cloned().fold(f64::MAX, f64::min),
            values.iter().cloned().fold(f64::MIN, f64::max),
        )
    });
    let span = (hi - lo).max(1e-300);
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = (((v - lo) / span * bins as f64) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let max_count = counts.iter().cloned().max().unwrap_or(1).max(1) as f64;
    let bar_w = (W - 2.0 * MARGIN) / bins as f64;
    for (i, &c) in counts.iter().enumerate() {
        let h = (c as f64 / max_count) * (H - 2.0 * MARGIN);
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"#1f77b4\" stroke=\"white\" stroke-width=\"0.5\"/>\n",
            MARGIN + i as f64 * bar_w,
            H - MARGIN - h,
            bar_w,
            h
        ));
    }
    for (v, anchor) in [(lo, "start"), (hi, "end")] {
        let x = if anchor == "start" { MARGIN } else { W - MARGIN };
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"{anchor}\" font-size=\"11\" \
             font-family=\"sans-serif\">{:.2}</text>\n",
            H - MARGIN + 18.0,
            v
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Parse a scenario CSV (ignoring `#` metadata) into header + numeric rows.
fn parse_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let row_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        match &header {
            None => header = Some(fields.iter().map(|s| s.to_string()).collect()),
            Some(cols) => {
                if fields.len() != cols.len() {
                    return Err(PlotError::Parse(format!(
                        "{}: row {row_no}: expected {} fields, got {}",
                        path.display(),
                        cols.len(),
                        fields.len()
                    )));
                }
                let parsed: std::result::Result<Vec<f64>, _> =
                    fields.iter().map(|f| f.parse::<f64>()).collect();
                rows.push(parsed.map_err(|_| {
                    PlotError::Parse(format!(
                        "{}: row {row_no}: non-numeric field",
                        path.display()
                    ))
                })?);
            }
        }
    }
    match header {
        Some(h) => Ok((h, rows)),
        None => Err(PlotError::Parse(format!(
            "{}: no header row found",
            path.display()
        ))),
    }
}

/// Render plots for a scenario CSV next to the file; the plot kind is chosen
/// from the header. Returns the paths written. Empty tables produce an
/// axes-only plot and a warning on stderr.
pub fn emit_plots(csv: &Path) -> Result<Vec<PathBuf>> {
    let (header, rows) = parse_table(csv)?;
    if rows.is_empty() {
        eprintln!("warning: {} has no data rows; emitting empty axes", csv.display());
    }
    let out = csv.with_extension("svg");
    let first = header.first().map(String::as_str).unwrap_or_default();
    let svg = if first == "trial" && header.iter().any(|c| c == "angle") {
        let angle_idx = header.iter().position(|c| c == "angle").unwrap();
        let angles: Vec<f64> = rows.iter().map(|r| r[angle_idx]).collect();
        histogram(
            &angles,
            36,
            "estimated momentum direction",
            Some((-std::f64::consts::PI, std::f64::consts::PI)),
        )
    } else if first == "trial" && header.get(1).map(String::as_str) == Some("step") {
        // multi-track table: outcomes against the step index
        let series: Vec<Series> = header
            .iter()
            .enumerate()
            .skip(2)
            .map(|(i, label)| Series {
                label: label.clone(),
                points: rows.iter().map(|r| (r[1], r[i])).collect(),
            })
            .collect();
        line_plot_opts(&series, "measurement records", false, false, false)
    } else {
        // generic: first column is the abscissa, the rest are series;
        // n/epsilon abscissas get log-log axes
        let log_axes = matches!(first, "n" | "n_pairs" | "epsilon");
        let series: Vec<Series> = header
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, label)| Series {
                label: label.clone(),
                points: rows.iter().map(|r| (r[0], r[i])).collect(),
            })
            .collect();
        let title = csv
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_default();
        line_plot(&series, &title, log_axes, log_axes)
    };
    fs::write(&out, svg)?;
    Ok(vec![out])
}
