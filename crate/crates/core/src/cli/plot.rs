//! Minimal SVG rendering of result tables.

use std::fmt::Write;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::output::Table;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// Columns `x, re, im, abs, chi`: three mode curves and the damping.
    Mode,
    /// Log-log scatter of the first column against `norm`, with the fitted
    /// line from the footer.
    Scan,
    /// `t` against `E` on a log scale.
    Trace,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mode" => Ok(Self::Mode),
            "scan" => Ok(Self::Scan),
            "trace" => Ok(Self::Trace),
            other => Err(Error::Invalid(format!("unknown plot kind {other:?}"))),
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(xs: &[f64], ys: &[f64]) -> Self {
        let range = |v: &[f64]| {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Self {
            x: range(xs),
            y: range(ys),
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

fn axes(svg: &mut String, f: &Frame, xlabel: &str, ylabel: &str, log: (bool, bool), title: &str) {
    let fmt = |v: f64, is_log: bool| {
        if is_log {
            format!("{:.3}", 10f64.powf(v))
        } else {
            format!("{v:.3}")
        }
    };
    let _ = write!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    for t in ticks(f.x.0, f.x.1) {
        let x = f.px(t);
        let _ = write!(
            svg,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}" stroke="black"/><text x="{x:.2}" y="{ty:.2}" font-size="11" text-anchor="middle">{}</text>"#,
            fmt(t, log.0),
            y0 = HEIGHT - BOTTOM,
            y1 = HEIGHT - BOTTOM + 5.0,
            ty = HEIGHT - BOTTOM + 18.0
        );
    }
    for t in ticks(f.y.0, f.y.1) {
        let y = f.py(t);
        let _ = write!(
            svg,
            r#"<line x1="{x0:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{tx:.2}" y="{ty:.2}" font-size="11" text-anchor="end">{}</text>"#,
            fmt(t, log.1),
            x0 = LEFT - 5.0,
            tx = LEFT - 8.0,
            ty = y + 4.0
        );
    }
    let _ = write!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = write!(
        svg,
        r#"<text x="16" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        escape(ylabel)
    );
    let _ = write!(
        svg,
        r#"<text x="{:.2}" y="20" font-size="13" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn polyline(svg: &mut String, f: &Frame, xs: &[f64], ys: &[f64], style: &str) {
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| format!("{:.2},{:.2}", f.px(*x), f.py(*y)))
        .collect();
    let _ = write!(svg, r#"<polyline fill="none" {style} points="{}"/>"#, pts.join(" "));
}

fn column(table: &Table, name: &str) -> Result<Vec<f64>> {
    table
        .column(name)
        .ok_or_else(|| Error::Invalid(format!("table has no column {name:?}")))
        .map(|c| c.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect())
}

/// Renders `table` as a standalone SVG document.
pub fn emit_plot(table: &Table, kind: PlotKind) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::Invalid("cannot plot an empty table".into()));
    }
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}"><rect width="100%" height="100%" fill="white"/>"#
    );
    match kind {
        PlotKind::Mode => {
            let x = column(table, "x")?;
            let curves = [column(table, "re")?, column(table, "im")?, column(table, "abs")?];
            let chi = column(table, "chi")?;
            let all: Vec<f64> = curves.iter().flatten().chain(&chi).copied().collect();
            let f = Frame::new(&x, &all);
            let title = table.footer_value("lambda").map_or("mode".to_string(), |l| format!("λ = {l}"));
            axes(&mut svg, &f, "x", "v(x)", (false, false), &title);
            let styles = [
                r##"stroke="#1f4fbf" stroke-width="1.2""##,
                r##"stroke="#5a8ae6" stroke-width="1.2" stroke-dasharray="2,2""##,
                r##"stroke="#0a1f66" stroke-width="1.6""##,
            ];
            for (c, s) in curves.iter().zip(styles) {
                polyline(&mut svg, &f, &x, c, s);
            }
            polyline(&mut svg, &f, &x, &chi, r##"stroke="#d62728" stroke-width="1.4" stroke-dasharray="6,4""##);
            let labels = [("Re v", "#1f4fbf"), ("Im v", "#5a8ae6"), ("|v|", "#0a1f66"), ("χ", "#d62728")];
            for (i, (label, color)) in labels.iter().enumerate() {
                let _ = write!(
                    svg,
                    r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="{color}">{label}</text>"#,
                    WIDTH - RIGHT - 60.0,
                    TOP + 16.0 + 15.0 * i as f64
                );
            }
        }
        PlotKind::Scan => {
            let name = table.columns[0].clone();
            let norm_col = if table.columns.iter().any(|c| c == "norm") { "norm" } else { "E" };
            let pairs: Vec<(f64, f64)> = column(table, &name)?
                .into_iter()
                .zip(column(table, norm_col)?)
                .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
                .map(|(x, y)| (x.log10(), y.log10()))
                .collect();
            if pairs.is_empty() {
                return Err(Error::Invalid("no positive rows to plot".into()));
            }
            let (lx, ly): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            let f = Frame::new(&lx, &ly);
            let slope = ["fitted_exponent", "fitted_slope"]
                .iter()
                .find_map(|k| table.footer_value(k))
                .and_then(|v| v.parse::<f64>().ok());
            let title = slope.map_or(String::new(), |s| format!("fitted exponent {s:.3}"));
            axes(&mut svg, &f, &name, norm_col, (true, true), &title);
            for (x, y) in &pairs {
                let _ = write!(
                    svg,
                    r##"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="#1f4fbf"/>"##,
                    f.px(*x),
                    f.py(*y)
                );
            }
            if let Some(s) = slope {
                let c = ly.iter().zip(&lx).map(|(y, x)| y - s * x).sum::<f64>() / lx.len() as f64;
                let (x0, x1) = (f.x.0, f.x.1);
                polyline(&mut svg, &f, &[x0, x1], &[c + s * x0, c + s * x1], r##"stroke="#d62728" stroke-width="1.2""##);
            }
        }
        PlotKind::Trace => {
            let pairs: Vec<(f64, f64)> = column(table, "t")?
                .into_iter()
                .zip(column(table, "E")?)
                .filter(|(_, e)| *e > 0.0)
                .map(|(t, e)| (t, e.log10()))
                .collect();
            if pairs.is_empty() {
                return Err(Error::Invalid("no positive energies to plot".into()));
            }
            let (t, le): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let f = Frame::new(&t, &le);
            axes(&mut svg, &f, "t", "E", (false, true), "energy");
            polyline(&mut svg, &f, &t, &le, r##"stroke="#1f4fbf" stroke-width="1.4""##);
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
