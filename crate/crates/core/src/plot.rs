//! Minimal standalone SVG charts. Every chart is also written as CSV, so the
//! SVGs are conveniences rather than the record.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 1.0, hi + 1.0)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        Frame {
            x: span(&mut xs.clone()),
            y: span(&mut ys.clone()),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn header(out: &mut String, title: &str, comment: Option<&str>) {
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    )
    .unwrap();
    if let Some(c) = comment {
        writeln!(out, "<!-- {} -->", c.replace("--", "- -")).unwrap();
    }
    writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>").unwrap();
    writeln!(
        out,
        "<text x=\"{}\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (x0, y0) = (MARGIN, HEIGHT - MARGIN);
    writeln!(
        out,
        "<path d=\"M{x0} {MARGIN} L{x0} {y0} L{} {y0}\" stroke=\"black\" fill=\"none\"/>",
        WIDTH - MARGIN
    )
    .unwrap();
    for (v, anchor, pos) in [
        (f.x.0, "start", (MARGIN, y0 + 20.0)),
        (f.x.1, "end", (WIDTH - MARGIN, y0 + 20.0)),
    ] {
        writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"11\">{v:.1}</text>",
            pos.0, pos.1
        )
        .unwrap();
    }
    for v in [f.y.0, f.y.1] {
        writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{v:.1}</text>",
            MARGIN - 5.0,
            f.py(v)
        )
        .unwrap();
    }
    writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
        WIDTH / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        out,
        "<text x=\"15\" y=\"{}\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    )
    .unwrap();
}

/// Observed counts as a polyline with markers, the fitted curve dashed, and
/// forecast points in a second color.
pub fn trend_chart(
    title: &str,
    observed: &[(f64, f64)],
    fitted: &[(f64, f64)],
    forecasts: &[(f64, f64)],
    comment: Option<&str>,
) -> String {
    let all = observed.iter().chain(fitted).chain(forecasts);
    let f = Frame::new(all.clone().map(|p| p.0), all.map(|p| p.1));
    let mut out = String::new();
    header(&mut out, title, comment);
    axes(&mut out, &f, "year", "publications");
    let path = |pts: &[(f64, f64)]| {
        pts.iter()
            .enumerate()
            .map(|(i, &(x, y))| format!("{}{:.2} {:.2}", if i == 0 { "M" } else { " L" }, f.px(x), f.py(y)))
            .collect::<String>()
    };
    if !fitted.is_empty() {
        writeln!(
            out,
            "<path d=\"{}\" stroke=\"#d62728\" stroke-dasharray=\"6 4\" fill=\"none\"/>",
            path(fitted)
        )
        .unwrap();
    }
    if !observed.is_empty() {
        writeln!(out, "<path d=\"{}\" stroke=\"#1f77b4\" fill=\"none\"/>", path(observed)).unwrap();
    }
    for &(x, y) in observed {
        writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f77b4\"/>",
            f.px(x),
            f.py(y)
        )
        .unwrap();
    }
    for &(x, y) in forecasts {
        writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"#ff7f0e\"/>",
            f.px(x),
            f.py(y)
        )
        .unwrap();
        writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">{:.0}</text>",
            f.px(x) + 6.0,
            f.py(y) - 6.0,
            y
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// A scatter point; only points with a label get text.
pub struct ScatterPoint<'a> {
    pub x: f64,
    pub y: f64,
    pub label: Option<&'a str>,
    pub series: usize,
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub fn scatter(
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[ScatterPoint<'_>],
    comment: Option<&str>,
) -> String {
    let f = Frame::new(points.iter().map(|p| p.x), points.iter().map(|p| p.y));
    let mut out = String::new();
    header(&mut out, title, comment);
    axes(&mut out, &f, x_label, y_label);
    for p in points {
        let color = PALETTE[p.series % PALETTE.len()];
        writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{}\" fill=\"{color}\" fill-opacity=\"0.6\"/>",
            f.px(p.x),
            f.py(p.y),
            if p.label.is_some() { 4 } else { 2 }
        )
        .unwrap();
        if let Some(l) = p.label {
            writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{}</text>",
                f.px(p.x) + 5.0,
                f.py(p.y) - 5.0,
                escape(l)
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}
