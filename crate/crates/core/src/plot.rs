//! Static SVG figures: per-component value panels (reference solid,
//! prediction dashed) over matching absolute-error panels.

use crate::error::{Error, Result};
use std::fmt::Write;

/// One component's series: shared abscissa, reference, and prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPair {
    pub name: String,
    pub t: Vec<f64>,
    pub reference: Vec<f64>,
    pub prediction: Vec<f64>,
}

impl SeriesPair {
    fn validate(&self) -> Result<()> {
        if self.t.len() < 2 {
            return Err(Error::Numerical(format!(
                "series '{}' needs at least 2 points, got {}",
                self.name,
                self.t.len()
            )));
        }
        if self.t.len() != self.reference.len() || self.t.len() != self.prediction.len() {
            return Err(Error::Dimension(format!(
                "series '{}' has mismatched lengths ({}, {}, {})",
                self.name,
                self.t.len(),
                self.reference.len(),
                self.prediction.len()
            )));
        }
        if self
            .t
            .iter()
            .chain(&self.reference)
            .chain(&self.prediction)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Numerical(format!(
                "series '{}' contains non-finite values",
                self.name
            )));
        }
        Ok(())
    }
}

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 240.0;
const MARGIN_L: f64 = 62.0;
const MARGIN_R: f64 = 14.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 40.0;

struct Frame {
    x0: f64,
    y0: f64,
    t_min: f64,
    t_span: f64,
    v_min: f64,
    v_span: f64,
}

impl Frame {
    fn map(&self, t: f64, v: f64) ->(f64, f64) {
        let px = self.x0 + MARGIN_L + (t - self.t_min) / self.t_span * (PANEL_W - MARGIN_L - MARGIN_R);
        let py = self.y0 + MARGIN_T
            + (1.0 - (v - self.v_min) / self.v_span) * (PANEL_H - MARGIN_T - MARGIN_B);
        (px, py)
    }
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 0.001 && v.abs() < 10000.0 {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn polyline(svg: &mut String, frame: &Frame, t: &[f64], v: &[f64], style: &str) {
    let mut points = String::new();
    for (x, y) in t.iter().zip(v) {
        let (px, py) = frame.map(*x, *y);
        let _ = write!(points, "{px:.2},{py:.2} ");
    }
    let _ = writeln!(
        svg,
        "  <polyline fill=\"none\" {style} points=\"{}\"/>",
        points.trim_end()
    );
}

fn range(series: &[&[f64]]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in series {
        for &v in *s {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo == hi {
        // flat series: pad so the line sits mid-panel
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

fn panel(
    svg: &mut String,
    col: usize,
    row: usize,
    title: &str,
    y_label: &str,
    t: &[f64],
    lines: &[(&[f64], &str)],
) {
    let x0 = col as f64 * PANEL_W;
    let y0 = row as f64 * PANEL_H;
    let (v_min, v_max) = range(&lines.iter().map(|(v, _)| *v).collect::<Vec<_>>());
    let frame = Frame {
        x0,
        y0,
        t_min: t[0],
        t_span: (t[t.len() - 1] - t[0]).max(f64::MIN_POSITIVE),
        v_min,
        v_span: v_max - v_min,
    };
    // axes
    let (ax0, ay0) = frame.map(frame.t_min, v_min);
    let (ax1, ay1) = frame.map(frame.t_min + frame.t_span, v_max);
    let _ = writeln!(
        svg,
        "  <rect x=\"{ax0:.2}\" y=\"{ay1:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#888\" stroke-width=\"1\"/>",
        ax1 - ax0,
        ay0 - ay1
    );
    // ticks
    for i in 0..=4 {
        let tv = frame.t_min + frame.t_span * i as f64 / 4.0;
        let (px, _) = frame.map(tv, v_min);
        let _ = writeln!(
            svg,
            "  <line x1=\"{px:.2}\" y1=\"{ay0:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#888\" stroke-width=\"1\"/>",
            ay0 + 4.0
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{px:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\">{}</text>",
            ay0 + 16.0,
            fmt_num(tv)
        );
        let vv = v_min + (v_max - v_min) * i as f64 / 4.0;
        let (_, py) = frame.map(frame.t_min, vv);
        let _ = writeln!(
            svg,
            "  <line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{ax0:.2}\" y2=\"{py:.2}\" stroke=\"#888\" stroke-width=\"1\"/>",
            ax0 - 4.0
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">{}</text>",
            ax0 - 6.0,
            py + 3.0,
            fmt_num(vv)
        );
    }
    // labels
    let _ = writeln!(
        svg,
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" font-weight=\"bold\">{title}</text>",
        x0 + PANEL_W / 2.0,
        y0 + 16.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">t</text>",
        x0 + MARGIN_L + (PANEL_W - MARGIN_L - MARGIN_R) / 2.0,
        y0 + PANEL_H - 8.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 {:.2} {:.2})\">{y_label}</text>",
        x0 + 14.0,
        y0 + PANEL_H / 2.0,
        x0 + 14.0,
        y0 + PANEL_H / 2.0
    );
    for (v, style) in lines {
        polyline(svg, &frame, t, v, style);
    }
}

/// Renders the two-row figure: values on top, absolute errors below, one
/// column per component. Returns a standalone SVG document.
pub fn emit_plot(panels: &[SeriesPair]) -> Result<String> {
    if panels.is_empty() {
        return Err(Error::Numerical("no series to plot".into()));
    }
    for p in panels {
        p.validate()?;
    }
    let cols = panels.len();
    let width = cols as f64 * PANEL_W;
    let height = 2.0 * PANEL_H;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width} {height}\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\">"
    );
    let _ = writeln!(svg, "  <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");

    const REF_STYLE: &str = "stroke=\"#1f77b4\" stroke-width=\"1.5\"";
    const PRED_STYLE: &str = "stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"";
    const ERR_STYLE: &str = "stroke=\"#333333\" stroke-width=\"1.2\"";

    for (col, p) in panels.iter().enumerate() {
        panel(
            &mut svg,
            col,
            0,
            &p.name,
            &p.name,
            &p.t,
            &[(&p.reference, REF_STYLE), (&p.prediction, PRED_STYLE)],
        );
        let abs_err = crate::metrics::abs_error_series(&p.prediction, &p.reference);
        panel(
            &mut svg,
            col,
            1,
            &format!("|error| {}", p.name),
            "abs error",
            &p.t,
            &[(&abs_err, ERR_STYLE)],
        );
    }
    // legend in the top-left panel
    let _ = writeln!(
        svg,
        "  <line x1=\"{:.0}\" y1=\"{:.0}\" x2=\"{:.0}\" y2=\"{:.0}\" {REF_STYLE}/>\n  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"10\">reference</text>",
        MARGIN_L + 6.0, MARGIN_T + 10.0, MARGIN_L + 30.0, MARGIN_T + 10.0, MARGIN_L + 34.0, MARGIN_T + 13.0
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{:.0}\" y1=\"{:.0}\" x2=\"{:.0}\" y2=\"{:.0}\" {PRED_STYLE}/>\n  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"10\">prediction</text>",
        MARGIN_L + 100.0, MARGIN_T + 10.0, MARGIN_L + 124.0, MARGIN_T + 10.0, MARGIN_L + 128.0, MARGIN_T + 13.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}
