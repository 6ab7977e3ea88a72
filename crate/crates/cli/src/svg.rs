//! Minimal static SVG charts.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 400.0;
const PAD_L: f64 = 70.0;
const PAD_R: f64 = 120.0;
const PAD_T: f64 = 40.0;
const PAD_B: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, y_lo: f64, y_hi: f64, x_label: &str) {
    let (x0, x1, y0, y1) = (PAD_L, W - PAD_R, H - PAD_B, PAD_T);
    let _ = writeln!(
        s,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#
    );
    for k in 0..=4 {
        let v = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        let y = y0 - (y0 - y1) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            y + 4.0,
            tick(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        H - 12.0,
        escape(x_label)
    );
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn legend(s: &mut String, names: &[&str]) {
    for (k, name) in names.iter().enumerate() {
        let y = PAD_T + 10.0 + 18.0 * k as f64;
        let x = W - PAD_R + 12.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            y - 10.0,
            COLORS[k % COLORS.len()],
            x + 18.0,
            y,
            escape(name)
        );
    }
}

/// Line chart of several `(x, y)` series sharing both axes.
pub fn line_chart(title: &str, x_label: &str, series: &[(&str, Vec<(f64, f64)>)]) -> String {
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x_lo, mut x_hi, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y) in pts {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        if y.is_finite() {
            y_hi = y_hi.max(y);
        }
    }
    if !(x_hi > x_lo) {
        x_hi = x_lo + 1.0;
    }
    if y_hi <= 0.0 {
        y_hi = 1.0;
    }
    let sx = |x: f64| PAD_L + (W - PAD_L - PAD_R) * (x - x_lo) / (x_hi - x_lo);
    let sy = |y: f64| H - PAD_B - (H - PAD_B - PAD_T) * y / y_hi;
    let mut s = header(title);
    axes(&mut s, 0.0, y_hi, x_label);
    for (k, (_, p)) in series.iter().enumerate() {
        let mut d = String::new();
        for (j, &(x, y)) in p.iter().enumerate() {
            let _ = write!(d, "{}{:.2} {:.2} ", if j == 0 { "M" } else { "L" }, sx(x), sy(y));
        }
        let _ = writeln!(
            s,
            r#"<path d="{}" stroke="{}" stroke-width="1.5" fill="none"/>"#,
            d.trim_end(),
            COLORS[k % COLORS.len()]
        );
    }
    legend(&mut s, &series.iter().map(|(n, _)| *n).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

/// Grouped bars: one group per category, one bar per series.
pub fn bar_chart(title: &str, categories: &[String], series: &[(String, Vec<f64>)]) -> String {
    let y_hi = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let y_lo = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .fold(0.0f64, f64::min);
    let span = y_hi - y_lo;
    let sy = |y: f64| H - PAD_B - (H - PAD_B - PAD_T) * (y - y_lo) / span;
    let group_w = (W - PAD_L - PAD_R) / categories.len().max(1) as f64;
    let bar_w = 0.8 * group_w / series.len().max(1) as f64;
    let mut s = header(title);
    axes(&mut s, y_lo, y_hi, "");
    for (g, cat) in categories.iter().enumerate() {
        let gx = PAD_L + group_w * g as f64 + 0.1 * group_w;
        for (k, (_, vals)) in series.iter().enumerate() {
            let v = vals.get(g).copied().unwrap_or(0.0);
            let (top, bottom) = (sy(v.max(0.0)), sy(v.min(0.0)));
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                gx + bar_w * k as f64,
                top,
                bar_w,
                (bottom - top).max(0.0),
                COLORS[k % COLORS.len()]
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"#,
            gx + 0.4 * group_w,
            H - PAD_B + 14.0,
            escape(cat)
        );
    }
    legend(&mut s, &series.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

/// Box-and-whisker rows on the unit interval: `(name, [min, q25, q50, q75, max])`.
pub fn box_plot(title: &str, rows: &[(String, [f64; 5])]) -> String {
    let sy = |y: f64| H - PAD_B - (H - PAD_B - PAD_T) * y.clamp(0.0, 1.0);
    let group_w = (W - PAD_L - PAD_R) / rows.len().max(1) as f64;
    let mut s = header(title);
    axes(&mut s, 0.0, 1.0, "");
    for (g, (name, q)) in rows.iter().enumerate() {
        let cx = PAD_L + group_w * (g as f64 + 0.5);
        let half = 0.3 * group_w;
        let _ = writeln!(
            s,
            r#"<path d="M{cx:.2} {:.2} L{cx:.2} {:.2} M{cx:.2} {:.2} L{cx:.2} {:.2}" stroke="black"/>"#,
            sy(q[0]),
            sy(q[1]),
            sy(q[3]),
            sy(q[4])
        );
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}" stroke="black"/>"#,
            cx - half,
            sy(q[3]),
            2.0 * half,
            (sy(q[1]) - sy(q[3])).max(0.0),
            COLORS[0]
        );
        let _ = writeln!(
            s,
            r#"<path d="M{:.2} {:.2} L{:.2} {:.2}" stroke="black" stroke-width="2"/>"#,
            cx - half,
            sy(q[2]),
            cx + half,
            sy(q[2])
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"#,
            H - PAD_B + 14.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}
