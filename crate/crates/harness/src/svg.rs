//! Self-contained SVG rendering of the benchmark curves: mean objective per
//! iteration with a +/- 1 std shaded band per strategy. No external plotting
//! dependencies; output is a pure function of the summary.

use crate::bench::BenchSummary;
use std::fmt::Write as _;

const WIDTH: f64 = 680.0;
const HEIGHT: f64 = 460.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

const LOG_FLOOR: f64 = 1e-16;

struct Scale {
    log: bool,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Scale {
    fn x(&self, k: f64) -> f64 {
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) * k / self.x_max.max(1.0)
    }

    fn y(&self, v: f64) -> f64 {
        let (v, lo, hi) = if self.log {
            (v.max(LOG_FLOOR).log10(), self.y_min.log10(), self.y_max.log10())
        } else {
            (v, self.y_min, self.y_max)
        };
        let span = (hi - lo).max(1e-300);
        HEIGHT - MARGIN_B - (HEIGHT - MARGIN_T - MARGIN_B) * (v - lo) / span
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// Render the per-strategy mean curves with shaded variance bands.
pub fn render_curves(summary: &BenchSummary) -> String {
    let mut x_max = 1.0f64;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    let mut any_nonpositive = false;
    for s in &summary.strategies {
        x_max = x_max.max(s.curve_mean.len().saturating_sub(1) as f64);
        for (m, sd) in s.curve_mean.iter().zip(&s.curve_std) {
            let lo = m - sd;
            let hi = m + sd;
            if lo <= 0.0 {
                any_nonpositive = true;
            }
            y_min = y_min.min(lo);
            y_max = y_max.max(hi);
        }
    }
    if !y_min.is_finite() || !y_max.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    let log = !any_nonpositive && y_min > 0.0 && y_max / y_min > 50.0;
    let scale = Scale {
        log,
        x_max,
        y_min: if log { y_min.max(LOG_FLOOR) } else { y_min },
        y_max: if y_max > y_min { y_max } else { y_min + 1.0 },
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="15">{} — mean objective vs iteration ({} axis)</text>"#,
        MARGIN_L,
        summary.family,
        if log { "log" } else { "linear" }
    );

    // Axes.
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let yb = HEIGHT - MARGIN_B;
    let _ = writeln!(
        out,
        r#"<line x1="{x0}" y1="{yb}" x2="{x1}" y2="{yb}" stroke="black" stroke-width="1"/>"#
    );
    let _ = writeln!(
        out,
        r#"<line x1="{x0}" y1="{MARGIN_T}" x2="{x0}" y2="{yb}" stroke="black" stroke-width="1"/>"#
    );
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let k = x_max * frac;
        let px = scale.x(k);
        let _ = writeln!(
            out,
            r#"<line x1="{px}" y1="{yb}" x2="{px}" y2="{}" stroke="black"/>"#,
            yb + 4.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{px}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            yb + 18.0,
            k.round() as i64
        );
    }
    let y_ticks = 5usize;
    for t in 0..=y_ticks {
        let frac = t as f64 / y_ticks as f64;
        let v = if log {
            10f64.powf(
                scale.y_min.log10() + (scale.y_max.log10() - scale.y_min.log10()) * frac,
            )
        } else {
            scale.y_min + (scale.y_max - scale.y_min) * frac
        };
        let py = scale.y(v);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{py}" x2="{x0}" y2="{py}" stroke="black"/>"#,
            x0 - 4.0
        );
        let label = if log {
            format!("1e{:+.0}", v.log10().round())
        } else {
            format!("{v:.2}")
        };
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{label}</text>"#,
            x0 - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">iteration</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 14.0
    );

    for (si, s) in summary.strategies.iter().enumerate() {
        if s.curve_mean.is_empty() {
            continue;
        }
        let color = PALETTE[si % PALETTE.len()];
        // Shaded band mean +/- std.
        let mut band = String::new();
        for (k, (m, sd)) in s.curve_mean.iter().zip(&s.curve_std).enumerate() {
            let _ = write!(band, "{},{} ", fmt(scale.x(k as f64)), fmt(scale.y(m + sd)));
        }
        for (k, (m, sd)) in s.curve_mean.iter().zip(&s.curve_std).enumerate().rev() {
            let _ = write!(band, "{},{} ", fmt(scale.x(k as f64)), fmt(scale.y(m - sd)));
        }
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{color}" opacity="0.15"/>"#,
            band.trim_end()
        );
        let mut line = String::new();
        for (k, m) in s.curve_mean.iter().enumerate() {
            let _ = write!(line, "{},{} ", fmt(scale.x(k as f64)), fmt(scale.y(*m)));
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            line.trim_end()
        );
        // Legend entry.
        let ly = MARGIN_T + 18.0 * si as f64;
        let lx = WIDTH - MARGIN_R + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#,
            lx + 22.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{} (median {} iters)</text>"#,
            lx + 28.0,
            ly + 4.0,
            s.name,
            s.iters_median
        );
    }
    out.push_str("</svg>\n");
    out
}
