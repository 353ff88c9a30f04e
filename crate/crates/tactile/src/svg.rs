//! Minimal SVG export for heatmaps and line plots, so figures can be
//! inspected without any plotting dependency. Output is plain text and
//! deterministic for identical input.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::Result;

const CELL: f64 = 22.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const MARGIN_RIGHT: f64 = 20.0;

/// Map t in [0,1] onto a dark-blue to yellow ramp.
fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    // Anchors roughly following viridis: (r,g,b) at t = 0, 0.5, 1.
    let anchors = [(68.0, 1.0, 84.0), (33.0, 145.0, 140.0), (253.0, 231.0, 37.0)];
    let (a, b, f) = if t < 0.5 {
        (anchors[0], anchors[1], t * 2.0)
    } else {
        (anchors[1], anchors[2], (t - 0.5) * 2.0)
    };
    let lerp = |x: f64, y: f64| (x + f * (y - x)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(a.0, b.0), lerp(a.1, b.1), lerp(a.2, b.2))
}

/// Heatmap of a locations-by-identities matrix; rows are locations on the
/// vertical axis (first location at the top).
pub fn heatmap(
    values: &Array2<f64>,
    loc_values: &[f64],
    id_values: &[f64],
    title: &str,
) -> String {
    let (n_loc, n_id) = values.dim();
    let width = MARGIN_LEFT + n_id as f64 * CELL + MARGIN_RIGHT;
    let height = MARGIN_TOP + n_loc as f64 * CELL + MARGIN_BOTTOM;

    let max = values.iter().cloned().fold(0.0f64, f64::max);
    let scale = if max > 0.0 { 1.0 / max } else { 0.0 };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" font-family="sans-serif" font-size="14">{}</text>"#,
        MARGIN_LEFT, title
    );
    for l in 0..n_loc {
        for i in 0..n_id {
            let x = MARGIN_LEFT + i as f64 * CELL;
            let y = MARGIN_TOP + l as f64 * CELL;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{CELL:.1}" height="{CELL:.1}" fill="{}"/>"#,
                color(values[[l, i]] * scale)
            );
        }
    }
    // Sparse axis labels.
    for (l, &v) in loc_values.iter().enumerate() {
        if l % 2 == 0 {
            let y = MARGIN_TOP + l as f64 * CELL + CELL * 0.7;
            let _ = writeln!(
                s,
                r#"<text x="4" y="{y:.1}" font-family="sans-serif" font-size="10">{v}</text>"#
            );
        }
    }
    for (i, &v) in id_values.iter().enumerate() {
        if i % 2 == 0 {
            let x = MARGIN_LEFT + i as f64 * CELL + 2.0;
            let y = MARGIN_TOP + n_loc as f64 * CELL + 14.0;
            let _ = writeln!(
                s,
                r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="10">{v}</text>"#
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="4" y="{:.1}" font-family="sans-serif" font-size="11">location</text>"#,
        MARGIN_TOP - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">what class</text>"#,
        MARGIN_LEFT,
        MARGIN_TOP + n_loc as f64 * CELL + 32.0
    );
    s.push_str("</svg>\n");
    s
}

/// One polyline of a line plot.
pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
    pub stroke: &'a str,
    pub dashed: bool,
}

/// Plain line plot with linear axes fitted to the data.
pub fn line_plot(series: &[Series], x_label: &str, y_label: &str, title: &str) -> String {
    let (w, h) = (520.0, 340.0);
    let (left, right, top, bottom) = (60.0, 20.0, 40.0, 50.0);

    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().cloned()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if all.is_empty() || x0 == x1 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if all.is_empty() || y0 == y1 {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{left:.1}" y="20" font-family="sans-serif" font-size="14">{title}</text>"#
    );
    // Axes.
    let _ = writeln!(
        s,
        r#"<line x1="{left:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        h - bottom,
        w - right,
        h - bottom
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left:.1}" y1="{top:.1}" x2="{left:.1}" y2="{:.1}" stroke="black"/>"#,
        h - bottom
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">{x_label}</text>"#,
        (left + w - right) / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="6" y="{:.1}" font-family="sans-serif" font-size="11">{y_label}</text>"#,
        top - 8.0
    );
    // Axis extent labels.
    let _ = writeln!(
        s,
        r#"<text x="{left:.1}" y="{:.1}" font-family="sans-serif" font-size="9">{x0}</text>"#,
        h - bottom + 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="9">{x1}</text>"#,
        w - right - 20.0,
        h - bottom + 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="8" y="{:.1}" font-family="sans-serif" font-size="9">{y1}</text>"#,
        top + 4.0
    );
    let _ = writeln!(
        s,
        r#"<text x="8" y="{:.1}" font-family="sans-serif" font-size="9">{y0}</text>"#,
        h - bottom
    );

    for (k, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let dash = if ser.dashed { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
            ser.stroke,
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" fill="{}">{}</text>"#,
            w - right - 120.0,
            top + 14.0 * (k as f64 + 1.0),
            ser.stroke,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn heatmap_is_wellformed_and_deterministic() {
        let v = array![[0.0, 1.0], [2.0, 3.0], [1.5, 0.5]];
        let a = heatmap(&v, &[0.0, 2.0, 4.0], &[10.0, 20.0], "map");
        let b = heatmap(&v, &[0.0, 2.0, 4.0], &[10.0, 20.0], "map");
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("<rect").count(), 6);
    }

    #[test]
    fn line_plot_handles_constant_series() {
        let s = [Series {
            label: "flat",
            points: vec![(0.0, 1.0), (1.0, 1.0)],
            stroke: "#ff7f0e",
            dashed: false,
        }];
        let svg = line_plot(&s, "x", "y", "t");
        assert!(svg.contains("polyline"));
    }
}
