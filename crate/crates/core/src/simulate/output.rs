//! CSV and SVG renderings of simulation results.

use std::fmt::Write;

use super::wave::ImpulseTrain;

/// `t, amplitude` rows.
pub fn impulse_csv(train: &ImpulseTrain) -> String {
    let mut out = String::from("t,amplitude\n");
    for (t, w) in &train.events {
        let _ = writeln!(out, "{t:.16e},{w:.16e}");
    }
    out
}

/// `t, ratio` rows.
pub fn decay_csv(table: &[(f64, f64)]) -> String {
    let mut out = String::from("t,ratio\n");
    for (t, r) in table {
        let _ = writeln!(out, "{t:.16e},{r:.16e}");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotStyle {
    Line,
    /// Vertical bars from zero, for impulse trains.
    Stems,
}

/// A minimal self-contained SVG plot.
pub fn svg_plot(points: &[(f64, f64)], title: &str, style: PlotStyle) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 40.0;
    let finite = points.iter().filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for &(x, y) in finite.clone() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{PAD}" y="20" font-family="sans-serif" font-size="14">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{PAD}" y1="{z:.2}" x2="{r:.2}" y2="{z:.2}" stroke="gray"/>"#,
        z = sy(0.0),
        r = W - PAD
    );
    let _ = writeln!(
        svg,
        r#"<text x="{PAD}" y="{:.2}" font-family="sans-serif" font-size="10">{x0:.3}</text><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{x1:.3}</text>"#,
        H - 10.0,
        W - PAD,
        H - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="4" y="{:.2}" font-family="sans-serif" font-size="10">{y1:.3}</text>"#,
        PAD
    );
    match style {
        PlotStyle::Line => {
            let path: Vec<String> = finite.map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        }
        PlotStyle::Stems => {
            for &(x, y) in finite {
                let _ = writeln!(
                    svg,
                    r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="steelblue"/>"#,
                    sy(0.0),
                    sy(y),
                    px = sx(x)
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_headers() {
        assert!(decay_csv(&[(1.0, 0.5)]).starts_with("t,ratio\n1.0000000000000000e0,5.0000000000000000e-1"));
    }

    #[test]
    fn svg_is_closed() {
        let s = svg_plot(&[(0.0, 1.0), (1.0, -1.0)], "a < b", PlotStyle::Stems);
        assert!(s.ends_with("</svg>\n"));
        assert!(s.contains("a &lt; b"));
    }
}
