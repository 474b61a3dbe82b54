//! Standalone SVG bar charts.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub label: String,
    pub value: f64,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 70.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Vertical bars around a zero line; negative values point down.
pub fn bar_chart(title: &str, bars: &[Bar]) -> String {
    let finite = |v: f64| if v.is_finite() { v } else { 0.0 };
    let hi = bars.iter().map(|b| finite(b.value)).fold(0.0f64, f64::max);
    let lo = bars.iter().map(|b| finite(b.value)).fold(0.0f64, f64::min);
    let span = if hi - lo > 0.0 { hi - lo } else { 1.0 };
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let y = |v: f64| MARGIN_T + (hi - v) / span * plot_h;
    let slot = plot_w / bars.len().max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
    for (i, b) in bars.iter().enumerate() {
        let v = finite(b.value);
        let (top, bottom) = if v >= 0.0 { (y(v), y(0.0)) } else { (y(0.0), y(v)) };
        let x = MARGIN_L + i as f64 * slot + slot * 0.15;
        let w = slot * 0.7;
        let fill = if v >= 0.0 { "#3b7dd8" } else { "#d8553b" };
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{top:.2}" width="{w:.2}" height="{:.2}" fill="{fill}"/>"#,
            (bottom - top).max(0.5)
        );
        let ly = if v >= 0.0 { top - 4.0 } else { bottom + 14.0 };
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}" text-anchor="middle">{v:.2}</text>"#, x + w / 2.0);
        let lx = x + w / 2.0;
        let ty = HEIGHT - MARGIN_B + 16.0;
        let _ = writeln!(
            s,
            r#"<text x="{lx:.2}" y="{ty:.2}" text-anchor="end" transform="rotate(-35 {lx:.2} {ty:.2})">{}</text>"#,
            escape(&b.label)
        );
    }
    let zero = y(0.0);
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN_L}" y1="{zero:.2}" x2="{}" y2="{zero:.2}" stroke="black"/>"#,
        WIDTH - MARGIN_R
    );
    let _ = writeln!(s, r#"<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{}" stroke="black"/>"#, HEIGHT - MARGIN_B);
    for (v, label) in [(hi, hi), (lo, lo)] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{label:.2}</text>"#, MARGIN_L - 6.0, y(v) + 4.0);
    }
    s.push_str("</svg>\n");
    s
}
