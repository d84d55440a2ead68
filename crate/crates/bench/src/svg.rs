//! Static line chart of the exceedance fraction against `n`, one line per
//! method, with the threshold curve `ξ_{n,β}` drawn alongside.

use std::fmt::Write as _;
use std::path::Path;

use arh_core::metrics::{Rate, ThresholdCurve};

use crate::table::ResultTable;
use crate::BenchError;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#111111", "#e377c2", "#17becf", "#2ca02c", "#9467bd", "#ff7f0e"];

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(table: &ResultTable, threshold: &ThresholdCurve, title: &str) -> String {
    let mut ns: Vec<usize> = table.rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let methods = table.methods();
    let xi: Vec<(usize, f64)> = ns.iter().map(|&n| (n, threshold.xi(n as f64))).collect();

    let ymax = table
        .rows
        .iter()
        .filter_map(|r| r.f_value())
        .chain(xi.iter().map(|p| p.1))
        .fold(0.0f64, f64::max)
        .max(1e-3)
        * 1.08;
    let (xmin, xmax) = match (ns.first(), ns.last()) {
        (Some(&a), Some(&b)) if a < b => (a as f64, b as f64),
        (Some(&a), _) => (a as f64 - 1.0, a as f64 + 1.0),
        _ => (0.0, 1.0),
    };
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |n: f64| LEFT + (n - xmin) / (xmax - xmin) * pw;
    let py = |v: f64| TOP + ph - v / ymax * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT},{TOP} V{} H{}" fill="none" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw
    );
    for i in 0..=5 {
        let v = ymax * i as f64 / 5.0;
        let y = py(v);
        let _ = writeln!(s, r##"<line x1="{}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="black"/><line x1="{LEFT}" y1="{y}" x2="{}" y2="{y}" stroke="#dddddd"/>"##, LEFT - 5.0, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, fmt_tick(v));
    }
    for &n in &ns {
        let x = px(n as f64);
        let _ = writeln!(s, r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{n}</text>"#, TOP + ph + 19.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">n</text>"#, LEFT + pw / 2.0, H - 14.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">F(k_n, n, β)</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    let mut legend = Vec::new();
    for (i, m) in methods.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .filter_map(|&n| table.row(m, n).and_then(|r| r.f_value()).map(|v| (px(n as f64), py(v))))
            .collect();
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5" stroke-dasharray="4 2"/>"#, path.join(" "));
        for (x, y) in &pts {
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
        }
        legend.push((escape(m), color));
    }
    let xi_path: Vec<String> = xi.iter().map(|&(n, v)| format!("{:.2},{:.2}", px(n as f64), py(v))).collect();
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#7fbf3f" stroke-width="1.5" stroke-dasharray="1 3"/>"##, xi_path.join(" "));
    let rate = match threshold.rate {
        Rate::Half => "1/2",
        Rate::Third => "1/3",
    };
    legend.push((format!("ξ, β = {}, n^{rate}", threshold.beta), "#7fbf3f"));

    for (i, (name, color)) in legend.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = LEFT + pw + 15.0;
        let _ = writeln!(s, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#, x + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{name}</text>"#, x + 26.0, y + 4.0);
    }
    s.push_str("</svg>\n");
    s
}

pub fn save(table: &ResultTable, threshold: &ThresholdCurve, title: &str, path: &Path) -> Result<(), BenchError> {
    std::fs::write(path, render(table, threshold, title)).map_err(|e| BenchError::Io(path.to_path_buf(), e))
}
