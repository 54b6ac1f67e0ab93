//! SVG rendering of breathing signals with peak markers.

use std::fmt::Write as _;

const WIDTH: f64 = 900.0;
const PANEL: f64 = 220.0;
const MARGIN: f64 = 50.0;

/// One stacked panel.
pub struct Series<'a> {
    pub label: &'a str,
    pub values: &'a [f64],
    pub color: &'a str,
    /// Sample indices to mark with circles.
    pub markers: &'a [usize],
}

fn range(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Renders each series in its own panel against a shared time axis.
pub fn render_svg(title: &str, fs: f64, panels: &[Series<'_>]) -> String {
    let height = MARGIN * 2.0 + PANEL * panels.len() as f64;
    let plot_w = WIDTH - 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        MARGIN / 2.0,
        escape(title)
    );
    for (i, p) in panels.iter().enumerate() {
        let top = MARGIN + i as f64 * PANEL;
        let inner = PANEL - 30.0;
        let n = p.values.len().max(2);
        let (lo, hi) = range(p.values);
        let x = |k: usize| MARGIN + plot_w * k as f64 / (n - 1) as f64;
        let y = |v: f64| top + inner * (1.0 - (v - lo) / (hi - lo));

        let _ = writeln!(
            s,
            r##"<rect x="{MARGIN}" y="{top}" width="{plot_w}" height="{inner}" fill="none" stroke="#999"/>"##
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, MARGIN + 4.0, top + 14.0, escape(p.label));
        if lo < 0.0 && hi > 0.0 {
            let zy = y(0.0);
            let _ = writeln!(
                s,
                r##"<line x1="{MARGIN}" y1="{zy:.2}" x2="{}" y2="{zy:.2}" stroke="#ddd"/>"##,
                MARGIN + plot_w
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{hi:.3}</text>"#, MARGIN - 4.0, top + 10.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{lo:.3}</text>"#, MARGIN - 4.0, top + inner);

        let mut path = String::new();
        for (k, v) in p.values.iter().enumerate() {
            let _ = write!(path, "{}{:.2},{:.2}", if k == 0 { "M" } else { " L" }, x(k), y(*v));
        }
        let _ = writeln!(s, r#"<path d="{path}" fill="none" stroke="{}" stroke-width="1.2"/>"#, p.color);
        for &m in p.markers.iter().filter(|&&m| m < p.values.len()) {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="none" stroke="crimson" stroke-width="1.5"/>"#,
                x(m),
                y(p.values[m])
            );
        }
        // time axis ticks every 5 s
        let duration = p.values.len() as f64 / fs;
        let mut t = 0.0;
        while t <= duration + 1e-9 && fs > 0.0 {
            let tx = MARGIN + plot_w * (t * fs) / (n - 1) as f64;
            if tx <= MARGIN + plot_w + 0.5 {
                let _ = writeln!(
                    s,
                    r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle">{t:.0}s</text>"#,
                    top + inner + 14.0
                );
            }
            t += 5.0;
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Raw and filtered panels, peaks marked on the filtered one.
pub fn signal_svg(title: &str, fs: f64, raw: &[f64], filtered: &[f64], peaks: &[usize]) -> String {
    render_svg(
        title,
        fs,
        &[
            Series {
                label: "raw",
                values: raw,
                color: "gray",
                markers: &[],
            },
            Series {
                label: "filtered",
                values: filtered,
                color: "steelblue",
                markers: peaks,
            },
        ],
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
