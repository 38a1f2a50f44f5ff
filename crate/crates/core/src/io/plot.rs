//! SVG line charts of a trace: velocities, positions and gaps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::csv::write_atomic;
use crate::error::Result;
use crate::simulator::SimulationTrace;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub const PLOT_FILES: [&str; 3] = ["velocity.svg", "position.svg", "gaps.svg"];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

struct Chart<'a> {
    title: &'a str,
    y_label: &'a str,
    series: Vec<Series>,
    /// Shaded `[start, end]` on the x axis.
    window: Option<(f64, f64)>,
}

/// Writes the three charts into `out_dir` and returns their paths.
pub fn emit_plots(trace: &SimulationTrace, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let window = trace
        .attack_window
        .map(|(onset, duration)| (onset as f64, (onset + duration) as f64));
    let per_vehicle = |from: usize, f: &dyn Fn(usize, usize) -> f64| -> Vec<Series> {
        (from..trace.vehicles())
            .map(|i| Series {
                label: format!("vehicle {i}"),
                points: (0..trace.steps()).map(|k| (k as f64, f(k, i))).collect(),
            })
            .collect()
    };
    let charts = [
        Chart {
            title: "Velocity",
            y_label: "velocity [m/s]",
            series: per_vehicle(0, &|k, i| trace.state(k, i).v),
            window,
        },
        Chart {
            title: "Position",
            y_label: "position [m]",
            series: per_vehicle(0, &|k, i| trace.state(k, i).s),
            window,
        },
        Chart {
            title: "Inter-vehicle gap",
            y_label: "gap to predecessor [m]",
            series: per_vehicle(1, &|k, i| trace.gap(k, i).unwrap_or(f64::NAN)),
            window,
        },
    ];
    let mut written = Vec::new();
    for (chart, name) in charts.iter().zip(PLOT_FILES) {
        let path = out_dir.join(name);
        write_atomic(&path, render(chart).as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// Range with a minimum span so flat or single-point data still draws.
fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span <= 1e-9 * lo.abs().max(1.0) {
        let pad = lo.abs().max(1.0) * 0.05;
        (lo - pad, hi + pad)
    } else {
        (lo - 0.05 * span, hi + 0.05 * span)
    }
}

/// Roughly `count` tick positions at 1, 2 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let raw = (hi - lo) / count.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut out = Vec::new();
    let mut t = (lo / step).ceil() * step;
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn tick_label(v: f64) -> String {
    if v.abs() >= 1e5 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn render(chart: &Chart) -> String {
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let xs = chart
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0));
    let (x0, x1) = {
        let (lo, hi) = padded_range(xs);
        (lo.max(0.0).min(hi), hi)
    };
    let ys = chart
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1));
    let (y0, y1) = padded_range(ys);
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        LEFT + pw / 2.0,
        chart.title
    );

    if let Some((a, b)) = chart.window {
        let (a, b) = (a.clamp(x0, x1), b.clamp(x0, x1));
        if b > a {
            let _ = writeln!(
                svg,
                r##"<rect class="attack-window" x="{:.2}" y="{TOP}" width="{:.2}" height="{ph}" fill="#d62728" fill-opacity="0.12"/>"##,
                px(a),
                px(b) - px(a)
            );
        }
    }

    for t in ticks(x0, x1, 8) {
        let x = px(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#e0e0e0"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 16.0,
            tick_label(t)
        );
    }
    for t in ticks(y0, y1, 6) {
        let y = py(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">time step k</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        chart.y_label
    );

    for (idx, series) in chart.series.iter().enumerate() {
        let colour = PALETTE[idx % PALETTE.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        if pts.len() == 1 {
            let (x, y) = pts[0].split_once(',').unwrap();
            let _ = writeln!(svg, r#"<circle cx="{x}" cy="{y}" r="3" fill="{colour}"/>"#);
        } else if !pts.is_empty() {
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let ly = TOP + 10.0 + 18.0 * idx as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            series.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}
