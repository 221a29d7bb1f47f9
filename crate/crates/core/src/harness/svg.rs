//! Minimal static SVG charts: line plots and cell heatmaps.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

fn range(vals: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return None;
    }
    if hi == lo {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{:.4}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Line chart with optional log-scaled axes. Non-positive values are dropped on log axes.
pub fn line_chart(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[Series],
    log_x: bool,
    log_y: bool,
) -> String {
    let tx = |v: f64| if log_x { v.log10() } else { v };
    let ty = |v: f64| if log_y { v.log10() } else { v };
    let keep = |&(x, y): &(f64, f64)| (!log_x || x > 0.0) && (!log_y || y > 0.0);
    let pts = || series.iter().flat_map(|s| s.points.iter().filter(|p| keep(p)));
    let (x0, x1) = range(pts().map(|p| tx(p.0))).unwrap_or((0.0, 1.0));
    let (y0, y1) = range(pts().map(|p| ty(p.1))).unwrap_or((0.0, 1.0));
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |v: f64| LEFT + (tx(v) - x0) / (x1 - x0) * pw;
    let sy = |v: f64| TOP + ph - (ty(v) - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (xl, yl) = (
            if log_x { 10f64.powf(xv) } else { xv },
            if log_y { 10f64.powf(yv) } else { yv },
        );
        let px = LEFT + f * pw;
        let py = TOP + ph - f * ph;
        let _ = writeln!(
            out,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + ph + 16.0,
            fmt_tick(xl)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py + 4.0,
            fmt_tick(yl)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(ylabel)
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|p| keep(p) && p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if path.is_empty() {
            continue;
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        );
        for p in &path {
            let (x, y) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
        }
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{ly:.1}" fill="{color}" text-anchor="end">{}</text>"#,
            W - RIGHT - 8.0,
            escape(s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Heatmap of coarse cells `(K_x, K_y, value)` of side `h`, diverging colour scale.
pub fn heatmap(title: &str, cells: &[(f64, f64, f64)], h: f64) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let (Some((x0, _)), Some((y0, _))) = (
        range(cells.iter().map(|c| c.0)),
        range(cells.iter().map(|c| c.1)),
    ) else {
        out.push_str("</svg>\n");
        return out;
    };
    let x1 = cells.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max) + h;
    let y1 = cells.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max) + h;
    let vmax = cells.iter().map(|c| c.2.abs()).filter(|v| v.is_finite()).fold(0.0, f64::max);
    let vmax = if vmax > 0.0 { vmax } else { 1.0 };
    let pw = W - LEFT - RIGHT - 60.0;
    let ph = H - TOP - BOTTOM;
    let scale = (pw / (x1 - x0)).min(ph / (y1 - y0));
    for &(x, y, v) in cells {
        let t = (v / vmax).clamp(-1.0, 1.0);
        let (r, g, b) = if t >= 0.0 {
            (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
        } else {
            (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
        };
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({},{},{})" stroke="gray" stroke-width="0.5"/>"#,
            LEFT + (x - x0) * scale,
            TOP + (y1 - y - h) * scale,
            h * scale,
            h * scale,
            r.round(),
            g.round(),
            b.round()
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}">max |value| = {}</text>"#,
        LEFT,
        H - 12.0,
        fmt_tick(vmax)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">k_x ∈ [{}, {}], k_y ∈ [{}, {}]</text>"#,
        LEFT + pw / 2.0 + 60.0,
        H - 12.0,
        fmt_tick(x0),
        fmt_tick(x1),
        fmt_tick(y0),
        fmt_tick(y1)
    );
    out.push_str("</svg>\n");
    out
}
