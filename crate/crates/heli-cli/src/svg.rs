//! Minimal static SVG line plots: axes, ticks, legend, one polyline per
//! series, dashed horizontal reference lines. Self-contained so traces can
//! be plotted from a bare toolchain.

use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
/// Downsampling target per polyline.
const MAX_POINTS: usize = 2000;

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct RefLine {
    pub y: f64,
    pub label: String,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub ref_lines: Vec<RefLine>,
}

impl Plot {
    pub fn render(&self) -> String {
        let (x_min, x_max, y_min, y_max) = self.ranges();
        let x_span = (x_max - x_min).max(1e-12);
        let y_span = (y_max - y_min).max(1e-12);
        let plot_w = WIDTH - MARGIN_L - MARGIN_R;
        let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
        let px = |x: f64| MARGIN_L + (x - x_min) / x_span * plot_w;
        let py = |y: f64| MARGIN_T + (1.0 - (y - y_min) / y_span) * plot_h;

        let mut s = String::with_capacity(64 * 1024);
        s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        );
        let _ = writeln!(
            s,
            "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
        );
        let _ = writeln!(
            s,
            "  <text x=\"{}\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" \
             text-anchor=\"middle\">{}</text>",
            WIDTH / 2.0,
            escape(&self.title)
        );

        // axes frame
        let _ = writeln!(
            s,
            "  <rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" \
             fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>"
        );

        // ticks
        for t in ticks(x_min, x_max) {
            let x = px(t);
            let _ = writeln!(
                s,
                "  <line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>",
                MARGIN_T + plot_h,
                MARGIN_T + plot_h + 5.0
            );
            let _ = writeln!(
                s,
                "  <text x=\"{x:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
                 text-anchor=\"middle\">{}</text>",
                MARGIN_T + plot_h + 18.0,
                fmt_tick(t)
            );
        }
        for t in ticks(y_min, y_max) {
            let y = py(t);
            let _ = writeln!(
                s,
                "  <line x1=\"{}\" y1=\"{y:.2}\" x2=\"{MARGIN_L}\" y2=\"{y:.2}\" stroke=\"black\"/>",
                MARGIN_L - 5.0
            );
            let _ = writeln!(
                s,
                "  <text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" \
                 text-anchor=\"end\">{}</text>",
                MARGIN_L - 8.0,
                y + 4.0,
                fmt_tick(t)
            );
        }

        // axis labels
        let _ = writeln!(
            s,
            "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{}</text>",
            MARGIN_L + plot_w / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            "  <text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>",
            MARGIN_T + plot_h / 2.0,
            MARGIN_T + plot_h / 2.0,
            escape(&self.y_label)
        );

        // reference lines
        for r in &self.ref_lines {
            let y = py(r.y);
            let _ = writeln!(
                s,
                "  <line x1=\"{MARGIN_L}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
                 stroke=\"#555555\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>",
                MARGIN_L + plot_w
            );
            let _ = writeln!(
                s,
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" \
                 fill=\"#555555\" text-anchor=\"end\">{}</text>",
                MARGIN_L + plot_w - 4.0,
                y - 4.0,
                escape(&r.label)
            );
        }

        // series
        for (i, series) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let stride = series.points.len().div_ceil(MAX_POINTS).max(1);
            let mut d = String::with_capacity(16 * 1024);
            for (j, &(x, y)) in series
                .points
                .iter()
                .step_by(stride)
                .chain(series.points.last().filter(|_| stride > 1))
                .enumerate()
            {
                if j > 0 {
                    d.push(' ');
                }
                let _ = write!(d, "{:.2},{:.2}", px(x), py(y));
            }
            let _ = writeln!(
                s,
                "  <polyline points=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.4\"/>"
            );
            // legend entry
            let ly = MARGIN_T + 16.0 + 16.0 * i as f64;
            let _ = writeln!(
                s,
                "  <line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" \
                 stroke=\"{color}\" stroke-width=\"2\"/>",
                MARGIN_L + plot_w - 120.0,
                MARGIN_L + plot_w - 96.0
            );
            let _ = writeln!(
                s,
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
                MARGIN_L + plot_w - 90.0,
                ly + 4.0,
                escape(&series.name)
            );
        }

        s.push_str("</svg>\n");
        s
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.render())
    }

    fn ranges(&self) -> (f64, f64, f64, f64) {
        let mut x_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for s in &self.series {
            for &(x, y) in &s.points {
                x_min = x_min.min(x);
                x_max = x_max.max(x);
                y_min = y_min.min(y);
                y_max = y_max.max(y);
            }
        }
        for r in &self.ref_lines {
            y_min = y_min.min(r.y);
            y_max = y_max.max(r.y);
        }
        if !x_min.is_finite() {
            (x_min, x_max, y_min, y_max) = (0.0, 1.0, 0.0, 1.0);
        }
        // a little headroom
        let pad = 0.05 * (y_max - y_min).max(1e-9);
        (x_min, x_max, y_min - pad, y_max + pad)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Around five ticks at a 1/2/5 step.
fn ticks(min: f64, max: f64) -> Vec<f64> {
    let span = (max - min).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| span / s <= 6.0)
        .unwrap_or(mag * 10.0);
    let first = (min / step).ceil() * step;
    let mut out = Vec::new();
    let mut t = first;
    while t <= max + 1e-9 * span {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(t: f64) -> String {
    if t == 0.0 {
        return "0".into();
    }
    let a = t.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{t:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{t:.1e}")
    }
}
