//! Minimal hand-written SVG charts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

pub struct BarSeries {
    pub name: String,
    pub values: Vec<f64>,
    /// Optional symmetric error bars.
    pub errors: Option<Vec<f64>>,
}

pub struct LineSeries {
    pub name: String,
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
    let _ =
        writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
}

fn axes(out: &mut String, y_max: f64, y_label: &str) {
    let x0 = LEFT;
    let y0 = H - BOTTOM;
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}" stroke="black"/>"#, W - RIGHT);
    for k in 0..=4 {
        let v = y_max * k as f64 / 4.0;
        let y = y0 - (y0 - TOP) * k as f64 / 4.0;
        let _ = writeln!(out, r#"<line x1="{}" y1="{y:.1}" x2="{x0}" y2="{y:.1}" stroke="black"/>"#, x0 - 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, x0 - 6.0, y + 4.0, tick(v));
    }
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">{}</text>"#,
        (TOP + y0) / 2.0,
        (TOP + y0) / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    if v == 0.0 || v.abs() >= 10.0 {
        format!("{v:.0}")
    } else if v.abs() >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.2}")
    }
}

fn legend(out: &mut String, names: &[&str]) {
    for (i, n) in names.iter().enumerate() {
        let x = LEFT + 10.0 + 150.0 * i as f64;
        let c = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, r#"<rect x="{x}" y="{}" width="10" height="10" fill="{c}"/>"#, H - 18.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, x + 14.0, H - 9.0, escape(n));
    }
}

fn nice_max(m: f64) -> f64 {
    if !(m > 0.0) || !m.is_finite() {
        return 1.0;
    }
    let p = 10f64.powf(m.log10().floor());
    let f = m / p;
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].into_iter().find(|s| f <= *s).unwrap_or(10.0);
    step * p
}

/// Grouped bar chart: one group per category, one bar per series.
pub fn bar_chart(title: &str, y_label: &str, categories: &[String], series: &[BarSeries]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let top = series
        .iter()
        .flat_map(|s| {
            s.values
                .iter()
                .enumerate()
                .map(move |(i, v)| v + s.errors.as_ref().map_or(0.0, |e| e.get(i).copied().unwrap_or(0.0)))
        })
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let y_max = nice_max(top);
    axes(&mut out, y_max, y_label);
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - BOTTOM - TOP;
    let group_w = plot_w / categories.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;
    for (ci, cat) in categories.iter().enumerate() {
        let gx = LEFT + group_w * ci as f64 + group_w * 0.1;
        for (si, s) in series.iter().enumerate() {
            let v = s.values.get(ci).copied().unwrap_or(0.0);
            let v = if v.is_finite() { v } else { 0.0 };
            let h = plot_h * v / y_max;
            let x = gx + bar_w * si as f64;
            let y = H - BOTTOM - h;
            let c = PALETTE[si % PALETTE.len()];
            let _ =
                writeln!(out, r#"<rect x="{x:.1}" y="{y:.1}" width="{:.1}" height="{h:.1}" fill="{c}"/>"#, bar_w * 0.9);
            if let Some(e) = s.errors.as_ref().and_then(|e| e.get(ci)).filter(|e| e.is_finite()) {
                let cx = x + bar_w * 0.45;
                let y_hi = H - BOTTOM - plot_h * (v + e) / y_max;
                let y_lo = H - BOTTOM - plot_h * (v - e).max(0.0) / y_max;
                let _ =
                    writeln!(out, r#"<line x1="{cx:.1}" y1="{y_hi:.1}" x2="{cx:.1}" y2="{y_lo:.1}" stroke="black"/>"#);
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            gx + group_w * 0.4,
            H - BOTTOM + 16.0,
            escape(cat)
        );
    }
    legend(&mut out, &series.iter().map(|s| s.name.as_str()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// Line chart with markers; the y axis spans `[0, y_max]`.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, y_max: f64, series: &[LineSeries]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, y_max, y_label);
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x_min, x_max) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (x_min, x_max) = if x_min.is_finite() && x_max > x_min { (x_min, x_max) } else { (0.0, 1.0) };
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - BOTTOM - TOP;
    let px = |x: f64| LEFT + plot_w * (x - x_min) / (x_max - x_min);
    let py = |y: f64| H - BOTTOM - plot_h * (y / y_max).clamp(0.0, 1.0);
    for x in [x_min, (x_min + x_max) / 2.0, x_max] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            px(x),
            H - BOTTOM + 16.0,
            tick(x)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        H - BOTTOM + 32.0,
        escape(x_label)
    );
    for (i, s) in series.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#, pts.join(" "));
        for &(x, y) in &s.points {
            let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{c}"/>"#, px(x), py(y));
        }
    }
    legend(&mut out, &series.iter().map(|s| s.name.as_str()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}
