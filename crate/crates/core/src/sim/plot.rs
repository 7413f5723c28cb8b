//! Minimal SVG line plots.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn bounds(series: &[(Vec<f64>, Vec<f64>)]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in series {
        for (&a, &c) in x.iter().zip(y) {
            if a.is_finite() && c.is_finite() {
                b = (b.0.min(a), b.1.max(a), b.2.min(c), b.3.max(c));
            }
        }
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if b.1 - b.0 < 1e-12 {
        b.1 = b.0 + 1.0;
    }
    if b.3 - b.2 < 1e-12 {
        b.2 -= 0.5;
        b.3 += 0.5;
    }
    b
}

/// One or more polylines on shared axes. `series` holds `(x, y)` pairs.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[(Vec<f64>, Vec<f64>)]) -> String {
    let (x0, x1, y0, y1) = bounds(series);
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="25" text-anchor="middle" font-size="16">{title}</text>"#, W / 2.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{xlabel}</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">{ylabel}</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (v, (tx, ty)) in [(x0, (PAD, H - PAD + 16.0)), (x1, (W - PAD, H - PAD + 16.0))] {
        let _ = writeln!(s, r#"<text x="{tx}" y="{ty}" text-anchor="middle" font-size="10">{v:.4}</text>"#);
    }
    for (v, ty) in [(y0, H - PAD), (y1, PAD)] {
        let _ = writeln!(s, r#"<text x="{}" y="{ty}" text-anchor="end" font-size="10">{v:.4}</text>"#, PAD - 4.0);
    }
    for (k, (x, y)) in series.iter().enumerate() {
        let pts: Vec<String> = x
            .iter()
            .zip(y)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| format!("{:.2},{:.2}", sx(*a), sy(*b)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            COLORS[k % COLORS.len()],
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}
