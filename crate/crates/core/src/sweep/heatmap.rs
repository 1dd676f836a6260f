//! Standalone SVG heatmaps of sweep metrics.
//!
//! Colour ramp: piecewise-linear interpolation in sRGB between the five
//! viridis stops below, quantised to 256 levels. A value `v` in `[0, 1]`
//! maps to level `floor(255·v)`, so only `v == 1` receives the top colour.
//! `keff2_norm`, `fom_norm` and `eta` are drawn on `[0, 1]` directly;
//! `fs_norm` is stretched between its grid minimum and maximum.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Metric, SweepError, SweepResult};

pub const RAMP_STOPS: [(f64, [u8; 3]); 5] = [
    (0.00, [0x44, 0x01, 0x54]),
    (0.25, [0x3b, 0x52, 0x8b]),
    (0.50, [0x21, 0x91, 0x8c]),
    (0.75, [0x5e, 0xc9, 0x62]),
    (1.00, [0xfd, 0xe7, 0x25]),
];

/// Colour of a value in `[0, 1]` (clamped), as `#rrggbb`.
pub fn color_ramp(value: f64) -> String {
    let v = if value.is_nan() { 0.0 } else { value.clamp(0.0, 1.0) };
    let level = (v * 255.0).floor() as u32;
    let t = level as f64 / 255.0;
    let k = RAMP_STOPS
        .windows(2)
        .position(|w| t <= w[1].0)
        .unwrap_or(RAMP_STOPS.len() - 2);
    let (t0, c0) = RAMP_STOPS[k];
    let (t1, c1) = RAMP_STOPS[k + 1];
    let s = (t - t0) / (t1 - t0);
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * s).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(c0[0], c1[0]), mix(c0[1], c1[1]), mix(c0[2], c1[2]))
}

const CELL: f64 = 20.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const LEGEND_W: f64 = 90.0;

fn ramp_domain(metric: Metric, values: &[Option<f64>]) -> (f64, f64) {
    match metric {
        Metric::FsNorm | Metric::Fs | Metric::Qm | Metric::Fom | Metric::Keff2 => {
            let lo = values.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() && hi > lo {
                (lo, hi)
            } else {
                (0.0, 1.0)
            }
        }
        Metric::Keff2Norm | Metric::FomNorm | Metric::Eta => (0.0, 1.0),
    }
}

/// SVG document for one metric and mode.
pub fn render_heatmap_svg(
    result: &SweepResult,
    metric: Metric,
    mode: usize,
) -> Result<String, SweepError> {
    let grid = result.grid(mode, metric)?;
    let (lo, hi) = ramp_domain(metric, &grid);
    let n_top = result.n_top();
    let n_bot = result.n_bottom();
    let plot_w = CELL * n_top as f64;
    let plot_h = CELL * n_bot as f64;
    let width = MARGIN_LEFT + plot_w + LEGEND_W;
    let height = MARGIN_TOP + plot_h + MARGIN_BOTTOM;

    let mut svg = String::new();
    let w = &mut svg;
    // Writing into a String cannot fail.
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        w,
        r##"<defs><pattern id="masked" patternUnits="userSpaceOnUse" width="6" height="6"><rect width="6" height="6" fill="#ffffff"/><path d="M0,6 L6,0" stroke="#888888" stroke-width="1"/></pattern></defs>"##
    );
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{} - mode {}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        metric.name(),
        mode
    );

    // Rows: bottom electrode, drawn with the thinnest at the bottom.
    for ib in 0..n_bot {
        for it in 0..n_top {
            let x = MARGIN_LEFT + CELL * it as f64;
            let y = MARGIN_TOP + CELL * (n_bot - 1 - ib) as f64;
            let fill = match grid[ib * n_top + it] {
                Some(v) => color_ramp((v - lo) / (hi - lo)),
                None => "url(#masked)".to_string(),
            };
            let _ = writeln!(
                w,
                r#"<rect class="cell" data-bottom="{ib}" data-top="{it}" x="{x:.1}" y="{y:.1}" width="{CELL:.1}" height="{CELL:.1}" fill="{fill}"/>"#
            );
        }
    }

    // Axes in units of t / t_piezo.
    let ticks = |axis: &[f64]| -> Vec<(usize, String)> {
        let n = axis.len();
        let step = (n.saturating_sub(1) / 4).max(1);
        (0..n)
            .filter(|i| i % step == 0 || *i == n - 1)
            .map(|i| (i, format!("{:.2}", axis[i] / result.t_piezo)))
            .collect()
    };
    for (i, label) in ticks(&result.top_axis) {
        let x = MARGIN_LEFT + CELL * (i as f64 + 0.5);
        let _ = writeln!(
            w,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#,
            MARGIN_TOP + plot_h + 14.0
        );
    }
    for (i, label) in ticks(&result.bottom_axis) {
        let y = MARGIN_TOP + CELL * ((n_bot - 1 - i) as f64 + 0.5) + 4.0;
        let _ = writeln!(
            w,
            r#"<text x="{:.1}" y="{y:.1}" text-anchor="end">{label}</text>"#,
            MARGIN_LEFT - 6.0
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">top electrode t / t_piezo</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        MARGIN_TOP + plot_h + 36.0
    );
    let _ = writeln!(
        w,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">bottom electrode t / t_piezo</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    // Legend: 64 swatches from the bottom (lo) to the top (hi).
    let lx = MARGIN_LEFT + plot_w + 20.0;
    let swatches = 64;
    let sh = plot_h / swatches as f64;
    for s in 0..swatches {
        let v = s as f64 / (swatches - 1) as f64;
        let y = MARGIN_TOP + plot_h - sh * (s + 1) as f64;
        let _ = writeln!(
            w,
            r#"<rect class="legend" x="{lx:.1}" y="{y:.3}" width="14" height="{:.3}" fill="{}"/>"#,
            sh + 0.05,
            color_ramp(v)
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
        lx + 18.0,
        MARGIN_TOP + 8.0,
        format_legend(hi)
    );
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
        lx + 18.0,
        MARGIN_TOP + plot_h,
        format_legend(lo)
    );
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

fn format_legend(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    }
}

/// Writes [`render_heatmap_svg`] to `path`. `metric` is one of `fs_norm`,
/// `keff2_norm`, `fom_norm` or `eta`.
pub fn render_heatmap(
    result: &SweepResult,
    metric: &str,
    mode: usize,
    path: &Path,
) -> Result<(), SweepError> {
    let metric: Metric = metric.parse()?;
    if !matches!(
        metric,
        Metric::FsNorm | Metric::Keff2Norm | Metric::FomNorm | Metric::Eta
    ) {
        return Err(SweepError::UnknownMetric(metric.name().to_string()));
    }
    let svg = render_heatmap_svg(result, metric, mode)?;
    fs::write(path, svg)?;
    Ok(())
}
