//! Standalone SVG line plots. Output depends only on the input table, so the
//! same CSV always gives the same bytes.

use std::fmt::Write as _;

use solitonlab_core::io::Table;

use crate::scenario::input_err;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Plots `columns` against the first column (or `x`).
pub fn render(table: &Table, x: Option<&str>, columns: &[String]) -> anyhow::Result<String> {
    if table.rows() == 0 {
        return Err(input_err("the table has no data rows"));
    }
    let x_name = x.map(str::to_owned).unwrap_or_else(|| table.headers[0].clone());
    let xs = table.column(&x_name).ok_or_else(|| input_err(format!("no column `{x_name}`")))?;
    let columns: Vec<String> = if columns.is_empty() {
        table.headers.iter().filter(|h| **h != x_name).cloned().collect()
    } else {
        columns.to_vec()
    };
    if columns.is_empty() {
        return Err(input_err("nothing to plot"));
    }
    let mut series = Vec::new();
    for c in &columns {
        let ys = table.column(c).ok_or_else(|| input_err(format!("no column `{c}`")))?;
        series.push((c.as_str(), ys));
    }

    let finite = |v: &&f64| v.is_finite();
    let (x0, x1) = bounds(xs.iter().filter(finite).copied());
    let (y0, y1) = bounds(series.iter().flat_map(|(_, ys)| ys.iter().filter(finite).copied()));
    if !(x0.is_finite() && y0.is_finite()) {
        return Err(input_err("no finite values to plot"));
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<g stroke="black" stroke-width="1"><line x1="{m}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}"/></g>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN
    );
    let _ = writeln!(svg, r#"<g font-family="sans-serif" font-size="11">"#);
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{}</text>"#, px(v), HEIGHT - MARGIN + 16.0, label(v));
    }
    for v in [y0, y1] {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, MARGIN - 4.0, py(v) + 4.0, label(v));
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(&x_name));
    for (i, (name, _)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let y = MARGIN + 14.0 * i as f64;
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{y:.2}" fill="{color}" text-anchor="end">{}</text>"#, WIDTH - MARGIN, escape(name));
    }
    let _ = writeln!(svg, "</g>");
    for (i, (_, ys)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = xs
            .iter()
            .zip(ys.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, points.join(" "));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn label(v: f64) -> String {
    format!("{v:.4}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
