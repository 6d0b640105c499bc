//! Static SVG line plots of convergence, conformality and sphericity.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use curvflow::metrics::{parse_csv, MetricRecord};

use crate::error::CliError;
use crate::PlotArgs;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Panel<'a> {
    pub title: &'a str,
    pub y_label: &'a str,
    pub log_y: bool,
}

pub const PANELS: [(&str, Panel<'static>, fn(&MetricRecord) -> f64); 3] = [
    (
        "convergence.svg",
        Panel {
            title: "Convergence",
            y_label: "convergence delta",
            log_y: true,
        },
        |r| r.convergence_delta,
    ),
    (
        "conformality.svg",
        Panel {
            title: "Conformality",
            y_label: "quasi-conformal error",
            log_y: false,
        },
        |r| r.qc_error,
    ),
    (
        "sphericity.svg",
        Panel {
            title: "Sphericity",
            y_label: "sphericity variance",
            log_y: false,
        },
        |r| r.sphericity_variance,
    ),
];

pub fn run(args: PlotArgs) -> Result<ExitCode, CliError> {
    let mut runs = Vec::new();
    for path in &args.csv {
        let file = File::open(path).map_err(CliError::io(path))?;
        let records = parse_csv(BufReader::new(file))
            .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        if records.is_empty() {
            return Err(CliError::Schema(format!("{}: no data rows", path.display())));
        }
        runs.push((label_for(path), records));
    }
    std::fs::create_dir_all(&args.out).map_err(CliError::io(&args.out))?;
    for path in write_panels(&runs, &args.out)? {
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn label_for(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn write_panels(runs: &[(String, Vec<MetricRecord>)], out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for (file, panel, value) in &PANELS {
        let series: Vec<Series> = runs
            .iter()
            .map(|(label, records)| Series {
                label: label.clone(),
                points: records.iter().map(|r| (r.step as f64, value(r))).collect(),
            })
            .collect();
        let path = out.join(file);
        std::fs::write(&path, render(panel, &series)).map_err(CliError::io(&path))?;
        written.push(path);
    }
    Ok(written)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Round-number tick positions covering `[lo, hi]`.
fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

pub fn render(panel: &Panel<'_>, series: &[Series]) -> String {
    let keep = |y: f64| y.is_finite() && (!panel.log_y || y > 0.0);
    let transform = |y: f64| if panel.log_y { y.log10() } else { y };
    let pts = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|p| keep(p.1) && p.0.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        let y = transform(y);
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if panel.log_y {
        y0 = y0.floor();
        y1 = y1.ceil();
    }
    if y1 - y0 < 1e-12 * y1.abs().max(1.0) {
        let pad = 0.5 * y1.abs().max(1e-12);
        y0 -= pad;
        y1 += pad;
    } else if !panel.log_y {
        let pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(panel.title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
    );

    for t in linear_ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            fmt_tick(t)
        );
    }
    let y_ticks: Vec<(f64, String)> = if panel.log_y {
        let (lo, hi) = (y0.round() as i64, y1.round() as i64);
        let stride = ((hi - lo) / 8 + 1).max(1);
        (lo..=hi)
            .filter(|e| (e - lo) % stride == 0)
            .map(|e| (e as f64, format!("1e{e}")))
            .collect()
    } else {
        linear_ticks(y0, y1).into_iter().map(|t| (t, fmt_tick(t))).collect()
    };
    for (t, label) in y_ticks {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#333"/><line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
            LEFT - 5.0,
            LEFT + pw,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">step</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(panel.y_label)
    );

    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        let mut pen_up = true;
        for &(x, y) in &s.points {
            if !(keep(y) && x.is_finite()) {
                pen_up = true;
                continue;
            }
            let _ = write!(d, "{}{:.2},{:.2} ", if pen_up { "M" } else { "L" }, sx(x), sy(transform(y)));
            pen_up = false;
        }
        let _ = writeln!(
            svg,
            r#"<path class="series" d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            d.trim_end()
        );
    }

    // Legend, top right inside the plot area.
    let lx = LEFT + pw - 150.0;
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let ly = TOP + 16.0 + 18.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text></g>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
