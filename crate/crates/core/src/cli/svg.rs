//! Minimal SVG line chart: one polyline per policy over a shaded band.

use std::fmt::Write as _;

use crate::runner::AggregateResult;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const MAX_POINTS: usize = 800;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

enum Scale {
    Linear { max: f64 },
    Log { lo: f64, hi: f64 },
}

impl Scale {
    fn y(&self, v: f64) -> f64 {
        let h = HEIGHT - TOP - BOTTOM;
        let frac = match *self {
            Scale::Linear { max } => v / max,
            Scale::Log { lo, hi } => (v.max(lo).log10() - lo.log10()) / (hi.log10() - lo.log10()),
        };
        TOP + h * (1.0 - frac.clamp(0.0, 1.0))
    }

    fn ticks(&self) -> Vec<f64> {
        match *self {
            Scale::Linear { max } => (0..=5).map(|i| max * i as f64 / 5.0).collect(),
            Scale::Log { lo, hi } => {
                let (a, b) = (lo.log10().round() as i32, hi.log10().round() as i32);
                (a..=b).map(|e| 10f64.powi(e)).collect()
            }
        }
    }
}

fn x(round: usize, horizon: usize) -> f64 {
    LEFT + (WIDTH - LEFT - RIGHT) * round as f64 / horizon.max(1) as f64
}

fn nice_ceiling(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    for step in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if step * mag >= v {
            return step * mag;
        }
    }
    10.0 * mag
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render mean cumulative regret curves with 95% bands.
pub fn render(result: &AggregateResult, title: &str, log_y: bool) -> String {
    let horizon = result.horizon;
    let top = result
        .policies
        .iter()
        .flat_map(|p| p.mean.iter().zip(&p.ci_half_width).map(|(m, h)| m + h))
        .fold(0.0, f64::max);
    let scale = if log_y {
        let smallest = result
            .policies
            .iter()
            .flat_map(|p| p.mean.iter().copied())
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min);
        let lo = if smallest.is_finite() {
            10f64.powf(smallest.log10().floor())
        } else {
            0.1
        };
        let hi = 10f64.powf(top.max(lo * 10.0).log10().ceil());
        Scale::Log { lo, hi }
    } else {
        Scale::Linear {
            max: nice_ceiling(top),
        }
    };
    let stride = (horizon / MAX_POINTS).max(1);
    let sample: Vec<usize> = (0..horizon)
        .step_by(stride)
        .chain(std::iter::once(horizon.saturating_sub(1)))
        .collect();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );

    // Axes and ticks.
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let round = horizon * i / 4;
        let px = x(round, horizon);
        let _ = writeln!(
            svg,
            r#"<line x1="{px}" y1="{y0}" x2="{px}" y2="{}" stroke="black"/><text x="{px}" y="{}" text-anchor="middle">{round}</text>"#,
            y0 + 5.0,
            y0 + 20.0
        );
    }
    for v in scale.ticks() {
        let py = scale.y(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{x0}" y1="{py}" x2="{x1}" y2="{py}" stroke="#e0e0e0"/><text x="{}" y="{}" text-anchor="end">{}</text>"##,
            x0 - 6.0,
            py + 4.0,
            format_tick(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">round</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(20,{}) rotate(-90)" text-anchor="middle">cumulative regret{}</text>"#,
        (y0 + y1) / 2.0,
        if log_y { " (log scale)" } else { "" }
    );

    for (idx, p) in result.policies.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let upper: Vec<String> = sample
            .iter()
            .map(|&t| format!("{:.2},{:.2}", x(t + 1, horizon), scale.y(p.mean[t] + p.ci_half_width[t])))
            .collect();
        let lower: Vec<String> = sample
            .iter()
            .rev()
            .map(|&t| format!("{:.2},{:.2}", x(t + 1, horizon), scale.y(p.mean[t] - p.ci_half_width[t])))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = sample
            .iter()
            .map(|&t| format!("{:.2},{:.2}", x(t + 1, horizon), scale.y(p.mean[t])))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            line.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * idx as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
            x1 + 15.0,
            x1 + 40.0,
            x1 + 46.0,
            ly + 4.0,
            escape(&p.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(v: f64) -> String {
    if v >= 1.0 || v == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}
