//! Minimal line-plot renderer producing standalone SVG.
//!
//! Output depends only on the inputs: coordinates are printed with a fixed
//! number of decimals and no timestamps or random ids are emitted.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Values at or below this are raised to it before taking `log10`.
pub const LOG_FLOOR: f64 = 1e-16;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Curve {
    pub fn new(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Curve {
            label: label.into(),
            x,
            y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Plot `log10(y)`, clipping at [`LOG_FLOOR`].
    pub log_y: bool,
    /// Larger x values on the left.
    pub reverse_x: bool,
    /// Dashed horizontal line `(label, y)`.
    pub reference: Option<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgDocument {
    pub text: String,
    /// Number of values raised to [`LOG_FLOOR`].
    pub clipped: usize,
}

fn transform(v: f64, log: bool, clipped: &mut usize) -> f64 {
    if log {
        if v <= LOG_FLOOR {
            *clipped += 1;
            LOG_FLOOR.log10()
        } else {
            v.log10()
        }
    } else {
        v
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64, log: bool) -> String {
    let t = format!("{v:.3}");
    let t = t.trim_end_matches('0').trim_end_matches('.');
    let t = if t == "-0" { "0" } else { t };
    if log {
        format!("1e{t}")
    } else {
        t.to_string()
    }
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.03 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

/// Renders one polyline per curve, axes with five ticks each, an optional
/// dashed reference line and a legend.
pub fn render_svg(curves: &[Curve], spec: &PlotSpec) -> Result<SvgDocument> {
    if curves.is_empty() || curves.iter().all(|c| c.x.is_empty()) {
        return Err(Error::Render("nothing to plot".into()));
    }
    let mut clipped = 0usize;
    let mut points: Vec<Vec<(f64, f64)>> = Vec::with_capacity(curves.len());
    for c in curves {
        if c.x.len() != c.y.len() {
            return Err(Error::Render(format!(
                "curve `{}` has {} x values and {} y values",
                c.label,
                c.x.len(),
                c.y.len()
            )));
        }
        let mut pts = Vec::with_capacity(c.x.len());
        for (&x, &y) in c.x.iter().zip(&c.y) {
            let ty = transform(y, spec.log_y, &mut clipped);
            if !x.is_finite() || !ty.is_finite() {
                return Err(Error::Render(format!(
                    "non-finite point ({x}, {y}) in curve `{}`",
                    c.label
                )));
            }
            pts.push((x, ty));
        }
        points.push(pts);
    }
    let reference = match &spec.reference {
        Some((label, v)) => {
            let t = transform(*v, spec.log_y, &mut clipped);
            if !t.is_finite() {
                return Err(Error::Render(format!("non-finite reference value {v}")));
            }
            Some((label.as_str(), t))
        }
        None => None,
    };

    let all = points.iter().flatten();
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if let Some((_, r)) = reference {
        y_lo = y_lo.min(r);
        y_hi = y_hi.max(r);
    }
    let (x_lo, x_hi) = padded_range(x_lo, x_hi);
    let (y_lo, y_hi) = padded_range(y_lo, y_hi);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| {
        let u = (x - x_lo) / (x_hi - x_lo);
        LEFT + plot_w * if spec.reverse_x { 1.0 - u } else { u }
    };
    let sy = |y: f64| TOP + plot_h * (1.0 - (y - y_lo) / (y_hi - y_lo));

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(
        s,
        "<metadata>log_y={} floor={LOG_FLOOR:e} clipped={clipped}</metadata>",
        spec.log_y
    )
    .unwrap();
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(&spec.title)
    )
    .unwrap();

    // Axes box and ticks.
    let (x0, x1, y0, y1) = (LEFT, LEFT + plot_w, TOP, TOP + plot_h);
    for (ax, ay, bx, by) in [(x0, y1, x1, y1), (x0, y0, x0, y1)] {
        writeln!(
            s,
            r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}" stroke="black"/>"#
        )
        .unwrap();
    }
    for k in 0..5 {
        let t = k as f64 / 4.0;
        let xv = x_lo + t * (x_hi - x_lo);
        let px = sx(xv);
        writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{y1:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#,
            y1 + 5.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y1 + 19.0,
            tick_label(xv, false)
        )
        .unwrap();
        let yv = y_lo + t * (y_hi - y_lo);
        let py = sy(yv);
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/>"#,
            x0 - 5.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            py + 4.0,
            tick_label(yv, spec.log_y)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(&spec.x_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(&spec.y_label)
    )
    .unwrap();

    if let Some((_, r)) = reference {
        let py = sy(r);
        writeln!(
            s,
            r#"<line x1="{x0:.2}" y1="{py:.2}" x2="{x1:.2}" y2="{py:.2}" stroke="gray" stroke-dasharray="6 4"/>"#
        )
        .unwrap();
    }
    for (i, pts) in points.iter().enumerate() {
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            PALETTE[i % PALETTE.len()],
            coords.join(" ")
        )
        .unwrap();
    }

    // Legend.
    let lx = x1 + 15.0;
    let mut ly = TOP + 10.0;
    let mut entries: Vec<(String, &str, bool)> = curves
        .iter()
        .enumerate()
        .map(|(i, c)| (c.label.clone(), PALETTE[i % PALETTE.len()], false))
        .collect();
    if let Some((label, _)) = reference {
        entries.push((label.to_string(), "gray", true));
    }
    for (label, color, dashed) in entries {
        let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
        writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 24.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            escape(&label)
        )
        .unwrap();
        ly += 18.0;
    }
    s.push_str("</svg>\n");
    Ok(SvgDocument { text: s, clipped })
}
