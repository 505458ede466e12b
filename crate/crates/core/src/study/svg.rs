use std::fmt::Write as _;

/// One curve of a log-log plot.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// `(h, value)` pairs; non-positive values are dropped.
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Static SVG 1.1 log-log plot with one polyline per series and a dashed
/// reference line of the given slope anchored at the first point of the
/// first series.
pub fn loglog_svg(title: &str, series: &[Series], reference_slope: f64) -> String {
    let logs: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.points.iter().filter(|(h, v)| *h > 0.0 && *v > 0.0).map(|(h, v)| (h.log10(), v.log10())).collect())
        .collect();
    let all: Vec<(f64, f64)> = logs.iter().flatten().copied().collect();
    let anchor = logs.iter().find_map(|s| s.first().copied());
    let reference = anchor.map(|(x0, y0)| {
        let x1 = all.iter().map(|p| p.0).fold(x0, f64::min);
        (x0, y0, x1, y0 + reference_slope * (x1 - x0))
    });
    let mut xs: Vec<f64> = all.iter().map(|p| p.0).collect();
    let mut ys: Vec<f64> = all.iter().map(|p| p.1).collect();
    if let Some((x0, y0, x1, y1)) = reference {
        xs.extend([x0, x1]);
        ys.extend([y0, y1]);
    }
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (xlo, xhi) = range(&xs);
    let (ylo, yhi) = range(&ys);
    let px = |x: f64| MARGIN + (x - xlo) / (xhi - xlo) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - ylo) / (yhi - ylo) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">log10 h</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="10">{:.2}</text><text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{:.2}</text>"#,
        MARGIN,
        HEIGHT - MARGIN + 14.0,
        xlo,
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 14.0,
        xhi
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{:.2}</text><text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{:.2}</text>"#,
        MARGIN - 4.0,
        HEIGHT - MARGIN,
        ylo,
        MARGIN - 4.0,
        MARGIN + 8.0,
        yhi
    );
    for (k, (s, pts)) in series.iter().zip(&logs).enumerate() {
        let color = COLORS[k % COLORS.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, coords.join(" "));
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="{color}">{}</text>"#,
            WIDTH - MARGIN + 4.0 - 100.0,
            MARGIN + 14.0 * (k + 1) as f64,
            escape(&s.label)
        );
    }
    if let Some((x0, y0, x1, y1)) = reference {
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6,4"/>"#,
            px(x0),
            py(y0),
            px(x1),
            py(y1)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="gray">O(h^{reference_slope})</text>"#,
            px(x1) + 4.0,
            py(y1)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
