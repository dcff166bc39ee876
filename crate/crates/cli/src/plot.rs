//! The `plot` command: renders the CSV outputs of one run as static SVG
//! line charts. Pure post-processing; nothing is recomputed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

/// Subset of the segment log needed for plotting.
#[derive(Debug, Deserialize)]
struct SegmentRow {
    seg_index: u64,
    version: u64,
    actual_bitrate_kbps: f64,
    buffer_after_s: f64,
}

#[derive(Debug, Deserialize)]
struct CdfRow {
    value: f64,
    cum_fraction: f64,
}

/// Renders the five charts for `run_dir` into `out_dir`. All chart strings
/// are built before any file is written, so a malformed input never leaves
/// partial output behind.
pub fn plot_run(run_dir: &Path, out_dir: &Path) -> Result<()> {
    let segments = read_segments(&run_dir.join("segments.csv"))?;
    let bitrate_cdf = read_cdf(&run_dir.join("bitrate_cdf.csv"))?;
    let rate_cdf = read_cdf(&run_dir.join("downloadrate_cdf.csv"))?;

    let by_seg = |f: fn(&SegmentRow) -> f64| -> Vec<(f64, f64)> {
        segments
            .iter()
            .map(|r| (r.seg_index as f64, f(r)))
            .collect()
    };
    let charts: Vec<(&str, String)> = vec![
        (
            "version_vs_segment.svg",
            line_chart(
                "Requested version per segment",
                "segment",
                "version index",
                &by_seg(|r| r.version as f64),
            ),
        ),
        (
            "bitrate_vs_segment.svg",
            line_chart(
                "Actual bitrate per segment",
                "segment",
                "bitrate (kbps)",
                &by_seg(|r| r.actual_bitrate_kbps),
            ),
        ),
        (
            "buffer_vs_segment.svg",
            line_chart(
                "Buffer level per segment",
                "segment",
                "buffer (s)",
                &by_seg(|r| r.buffer_after_s),
            ),
        ),
        (
            "bitrate_cdf.svg",
            line_chart(
                "Bitrate CDF",
                "bitrate (kbps)",
                "cumulative fraction",
                &bitrate_cdf,
            ),
        ),
        (
            "downloadrate_cdf.svg",
            line_chart(
                "Download rate CDF",
                "download rate (kbps)",
                "cumulative fraction",
                &rate_cdf,
            ),
        ),
    ];

    fs::create_dir_all(out_dir)?;
    for (name, svg) in charts {
        fs::write(out_dir.join(name), svg)?;
    }
    Ok(())
}

fn read_segments(path: &Path) -> Result<Vec<SegmentRow>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<SegmentRow>, _>>()
        .with_context(|| format!("parsing {}", path.display()))?;
    if rows.is_empty() {
        bail!("{} has no data rows", path.display());
    }
    Ok(rows)
}

fn read_cdf(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = reader
        .deserialize()
        .map(|r| r.map(|c: CdfRow| (c.value, c.cum_fraction)))
        .collect::<std::result::Result<Vec<_>, _>>()
        .with_context(|| format!("parsing {}", path.display()))?;
    if rows.is_empty() {
        bail!("{} has no data rows", path.display());
    }
    Ok(rows)
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

/// Minimal single-series line chart with axes, ticks and labels.
fn line_chart(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let (x_min, x_max) = bounds(points.iter().map(|p| p.0));
    let (y_min, y_max) = bounds(points.iter().map(|p| p.1));
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    // Axes.
    let x0 = MARGIN_LEFT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let _ = writeln!(
        svg,
        r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{:.1}" y2="{y0:.1}" stroke="black"/>"#,
        WIDTH - MARGIN_RIGHT
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x0:.1}" y2="{MARGIN_TOP:.1}" stroke="black"/>"#
    );

    // Ticks: five per axis, value labels at 3 significant digits.
    for i in 0..=4 {
        let fx = x_min + (x_max - x_min) * i as f64 / 4.0;
        let px = sx(fx);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.1}" y1="{y0:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            y0 + 18.0,
            tick_label(fx)
        );

        let fy = y_min + (y_max - y_min) * i as f64 / 4.0;
        let py = sy(fy);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{x0:.1}" y2="{py:.1}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            py + 4.0,
            tick_label(fy)
        );
    }

    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(y_label)
    );

    let mut poly = String::new();
    for &(x, y) in points {
        let _ = write!(poly, "{:.2},{:.2} ", sx(x), sy(y));
    }
    let _ = writeln!(
        svg,
        r##"<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{}"/>"##,
        poly.trim_end()
    );
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    let span = max - min;
    if !span.is_finite() || span <= 0.0 {
        // Degenerate flat series: widen so the scale stays finite.
        (min - 1.0, max + 1.0)
    } else {
        (min, max)
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
