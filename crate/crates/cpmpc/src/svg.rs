//! Just enough SVG for line plots: panels with axes, polylines, shaded boxes
//! and a legend.

use std::fmt::Write;

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            body: String::new(),
        }
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, opacity: f64) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}" fill-opacity="{opacity}"/>"#
        );
    }

    pub fn line(&mut self, a: (f64, f64), b: (f64, f64), stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{stroke}" stroke-width="{width}"/>"#,
            a.0, a.1, b.0, b.1
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64, dashed: bool) {
        let mut pts = String::new();
        for (x, y) in points {
            let _ = write!(pts, "{x:.2},{y:.2} ");
        }
        let dash = if dashed { r#" stroke-dasharray="6 3""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"{dash}/>"#,
            pts.trim_end()
        );
    }

    pub fn circle(&mut self, c: (f64, f64), r: f64, fill: &str) {
        let _ = writeln!(self.body, r#"<circle cx="{:.2}" cy="{:.2}" r="{r}" fill="{fill}"/>"#, c.0, c.1);
    }

    pub fn text(&mut self, at: (f64, f64), s: &str, size: f64, anchor: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}">{}</text>"#,
            at.0,
            at.1,
            escape(s)
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n",
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

/// Data range widened so that flat series still get a visible axis.
pub fn padded_range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.into_iter().filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    let span = hi - lo;
    let pad = if span > 1e-12 { 0.05 * span } else { 0.01_f64.max(0.1 * lo.abs()) };
    (lo - pad, hi + pad)
}

/// A rectangle of the canvas mapped to a data window.
pub struct Panel {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl Panel {
    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let fx = (x - self.x_range.0) / (self.x_range.1 - self.x_range.0);
        let fy = (y - self.y_range.0) / (self.y_range.1 - self.y_range.0);
        (self.left + fx * self.width, self.top + (1.0 - fy) * self.height)
    }

    pub fn axes(&self, svg: &mut Svg, title: &str, x_label: &str, y_label: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        svg.line((l, t + h), (l + w, t + h), "black", 1.0);
        svg.line((l, t), (l, t + h), "black", 1.0);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x_range.0 + f * (self.x_range.1 - self.x_range.0);
            let yv = self.y_range.0 + f * (self.y_range.1 - self.y_range.0);
            let px = l + f * w;
            let py = t + (1.0 - f) * h;
            svg.line((px, t + h), (px, t + h + 4.0), "black", 1.0);
            svg.text((px, t + h + 16.0), &tick(xv), 10.0, "middle");
            svg.line((l - 4.0, py), (l, py), "black", 1.0);
            svg.line((l, py), (l + w, py), "#dddddd", 0.5);
            svg.text((l - 6.0, py + 3.0), &tick(yv), 10.0, "end");
        }
        svg.text((l + w / 2.0, t - 8.0), title, 13.0, "middle");
        svg.text((l + w / 2.0, t + h + 32.0), x_label, 11.0, "middle");
        svg.text((l - 48.0, t + h / 2.0), y_label, 11.0, "middle");
    }

    /// Horizontal band between `lo` and `hi`, clipped to the panel.
    pub fn band(&self, svg: &mut Svg, lo: f64, hi: f64, fill: &str) {
        let lo = lo.max(self.y_range.0);
        let hi = hi.min(self.y_range.1);
        if hi < lo {
            return;
        }
        let (_, y_hi) = self.map(self.x_range.0, hi);
        let (_, y_lo) = self.map(self.x_range.0, lo);
        svg.rect(self.left, y_hi, self.width, (y_lo - y_hi).max(1.0), fill, 0.25);
    }

    pub fn trace(&self, svg: &mut Svg, xs: &[f64], ys: &[f64], stroke: &str, dashed: bool) {
        let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| self.map(*x, *y)).collect();
        svg.polyline(&pts, stroke, 1.5, dashed);
    }

    pub fn legend(&self, svg: &mut Svg, entries: &[(&str, &str)]) {
        for (i, (label, color)) in entries.iter().enumerate() {
            let y = self.top + 12.0 + 14.0 * i as f64;
            let x = self.left + self.width - 90.0;
            svg.line((x, y - 4.0), (x + 18.0, y - 4.0), color, 2.0);
            svg.text((x + 22.0, y), label, 10.0, "start");
        }
    }
}

fn tick(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 1e-2 && v.abs() < 1e4) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}
