//! Hand-written SVG line charts on a fixed 960x540 canvas.
//!
//! Output depends only on the input numbers, so replotting a report is byte-identical.

use std::fmt::Write as _;

use crate::error::{LabError, Result};
use crate::report::Table;

const W: f64 = 960.0;
const H: f64 = 540.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

impl Scale {
    fn map(self, v: f64) -> f64 {
        match self {
            Scale::Linear => v,
            Scale::Log => v.log10(),
        }
    }
    fn admits(self, v: f64) -> bool {
        v.is_finite() && (self == Scale::Linear || v > 0.0)
    }
}

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Which columns of a table to draw: `x`, `y`, and optionally a column whose distinct values
/// split the rows into separate series.
#[derive(Clone, Debug, PartialEq)]
pub struct Selector {
    pub x: String,
    pub y: String,
    pub group: Option<String>,
    pub x_scale: Scale,
    pub y_scale: Scale,
}

impl Selector {
    /// Parse `x:y[:group]`; the scales default to log-log.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(2..=3).contains(&parts.len()) || parts.iter().any(|p| p.is_empty()) {
            return Err(LabError::InvalidParameter(format!("selector '{s}' is not x:y[:group]")));
        }
        Ok(Selector {
            x: parts[0].into(),
            y: parts[1].into(),
            group: parts.get(2).map(|g| g.to_string()),
            x_scale: Scale::Log,
            y_scale: Scale::Log,
        })
    }

    pub fn with_scales(mut self, x: Scale, y: Scale) -> Self {
        self.x_scale = x;
        self.y_scale = y;
        self
    }
}

/// Series from table columns; group values keep their first-seen order.
pub fn select(table: &Table, sel: &Selector) -> Result<Vec<Series>> {
    let col = |name: &str| {
        table.columns.iter().position(|c| c == name).ok_or_else(|| LabError::InvalidParameter(format!("unknown column '{name}'")))
    };
    let (ix, iy) = (col(&sel.x)?, col(&sel.y)?);
    let ig = sel.group.as_deref().map(col).transpose()?;
    let mut out: Vec<Series> = Vec::new();
    for row in &table.rows {
        let label = ig.map_or_else(|| sel.y.clone(), |g| format!("{}={}", sel.group.as_deref().unwrap(), row[g]));
        let p = (crate::report::parse_num(&row[ix]), crate::report::parse_num(&row[iy]));
        match out.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push(p),
            None => out.push(Series { label, points: vec![p] }),
        }
    }
    Ok(out)
}

/// Render a line chart. Points that the scale cannot show (non-finite, or nonpositive on a
/// log axis) are skipped.
pub fn line_chart(title: &str, sel: &Selector, series: &[Series]) -> Result<String> {
    let keep = |&(x, y): &(f64, f64)| sel.x_scale.admits(x) && sel.y_scale.admits(y);
    let mapped: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.points.iter().filter(|p| keep(p)).map(|&(x, y)| (sel.x_scale.map(x), sel.y_scale.map(y))).collect())
        .collect();
    let all: Vec<(f64, f64)> = mapped.iter().flatten().copied().collect();
    if all.is_empty() {
        return Err(LabError::InvalidParameter(format!("nothing to plot for {}:{}", sel.x, sel.y)));
    }
    let (mut x0, mut x1) = bounds(all.iter().map(|p| p.0));
    let (mut y0, mut y1) = bounds(all.iter().map(|p| p.1));
    pad(&mut x0, &mut x1);
    pad(&mut y0, &mut y1);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 960 540" width="960" height="540" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r##"<rect x="0" y="0" width="960" height="540" fill="#ffffff"/>"##);
    let _ = writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, escape(title));
    let _ = writeln!(s, r##"<rect x="{LEFT:.1}" y="{TOP:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#444444"/>"##);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (gx, gy) = (px(xv), py(yv));
        let _ = writeln!(s, r##"<line x1="{gx:.1}" y1="{:.1}" x2="{gx:.1}" y2="{:.1}" stroke="#dddddd"/>"##, TOP, TOP + ph);
        let _ = writeln!(s, r##"<line x1="{LEFT:.1}" y1="{gy:.1}" x2="{:.1}" y2="{gy:.1}" stroke="#dddddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{gx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, tick(xv, sel.x_scale));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, LEFT - 6.0, gy + 4.0, tick(yv, sel.y_scale));
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 16.0, escape(&sel.x));
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&sel.y)
    );
    for (k, (ser, pts)) in series.iter().zip(&mapped).enumerate() {
        let color = COLORS[k % COLORS.len()];
        if !pts.is_empty() {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#, path.join(" "));
            for &(x, y) in pts {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(x), py(y));
            }
        }
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 14.0;
        let _ = writeln!(s, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Select and render in one step.
pub fn plot_table(table: &Table, sel: &Selector, title: &str) -> Result<String> {
    line_chart(title, sel, &select(table, sel)?)
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn pad(lo: &mut f64, hi: &mut f64) {
    let span = *hi - *lo;
    let d = if span > 0.0 { 0.05 * span } else { 0.5 * lo.abs().max(1.0) };
    *lo -= d;
    *hi += d;
}

fn tick(v: f64, scale: Scale) -> String {
    match scale {
        Scale::Linear => fmt_short(v),
        Scale::Log => format!("1e{}", fmt_short(v)),
    }
}

fn fmt_short(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Used by the CLI for file names derived from selectors.
pub fn slug(sel: &Selector) -> String {
    let mut s = format!("{}_vs_{}", sel.y, sel.x);
    if let Some(g) = &sel.group {
        s.push_str("_by_");
        s.push_str(g);
    }
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '-' }).collect()
}
