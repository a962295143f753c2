//! Minimal log-log SVG line chart.

use std::fmt::Write as _;

use super::aggregate::AggregateSeries;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

struct Line {
    label: &'static str,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

/// Renders the series against `k + 1`. With a known `f*` the curves show
/// `value - f*`; points that are not positive are dropped.
pub fn render_svg(series: &AggregateSeries, title: &str) -> String {
    let shift = series.opt_value.unwrap_or(0.0);
    let xs: Vec<f64> = series.checkpoints.iter().map(|&k| k as f64 + 1.0).collect();
    let line = |label, ys: &[f64], offset: f64, dashed| Line {
        label,
        points: xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| (x, y - offset))
            .filter(|&(_, y)| y > 0.0 && y.is_finite())
            .collect(),
        dashed,
    };
    let mut lines = vec![
        line("mean f(x_k)", &series.mean_f, shift, false),
        line("mean best f", &series.mean_best_f, shift, false),
    ];
    if let Some(g) = &series.avg_gap {
        lines.push(line("running-average gap", g, 0.0, false));
    }
    if let Some(b) = &series.bound_rhs {
        lines.push(line("bound", b, 0.0, true));
    }
    lines.retain(|l| !l.points.is_empty());

    let all = lines.iter().flat_map(|l| l.points.iter());
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x_lo = x_lo.min(x.log10());
        x_hi = x_hi.max(x.log10());
        y_lo = y_lo.min(y.log10());
        y_hi = y_hi.max(y.log10());
    }
    if x_lo > x_hi {
        (x_lo, x_hi, y_lo, y_hi) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x_lo, x_hi) = (x_lo.floor(), x_hi.ceil().max(x_lo.floor() + 1.0));
    let (y_lo, y_hi) = (y_lo.floor(), y_hi.ceil().max(y_lo.floor() + 1.0));
    let px = |x: f64| MARGIN + (x.log10() - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let py =
        |y: f64| HEIGHT - MARGIN - (y.log10() - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );
    for e in x_lo as i32..=x_hi as i32 {
        let x = px(10f64.powi(e));
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.1}" y1="{top}" x2="{x:.1}" y2="{bottom}" stroke="#ddd"/><text x="{x:.1}" y="{}" text-anchor="middle">1e{e}</text>"##,
            bottom + 16.0
        );
    }
    for e in y_lo as i32..=y_hi as i32 {
        let y = py(10f64.powi(e));
        let _ = writeln!(
            svg,
            r##"<line x1="{left}" y1="{y:.1}" x2="{right}" y2="{y:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">1e{e}</text>"##,
            left - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">k + 1</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let y_label = if series.opt_value.is_some() {
        "f - f*"
    } else {
        "f"
    };
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (i, l) in lines.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = l
            .points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        let dash = if l.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + 16.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            right - 170.0,
            right - 140.0,
            right - 134.0,
            ly + 4.0,
            l.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
