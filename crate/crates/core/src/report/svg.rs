//! Deterministic SVG charts: frequency histogram, similarity heatmap and
//! cluster scatter plot. Coordinates are printed with two decimals.

use std::collections::BTreeMap;

use crate::cluster::{ClusterAssignment, Projection2D};
use crate::error::{Error, Result};
use crate::features::SimilarityMatrix;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

const FONT: &str = "font-family=\"sans-serif\"";

pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) struct Svg {
    width: f64,
    height: f64,
    view_min: (f64, f64),
    body: String,
}

impl Svg {
    pub(crate) fn new(width: f64, height: f64) -> Self {
        Self::with_view(0.0, 0.0, width, height)
    }

    pub(crate) fn with_view(min_x: f64, min_y: f64, width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            view_min: (min_x, min_y),
            body: String::new(),
        }
    }

    pub(crate) fn raw(&mut self, s: &str) {
        self.body.push_str(s);
        self.body.push('\n');
    }

    pub(crate) fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.2}\" height=\"{h:.2}\" viewBox=\"{x:.2} {y:.2} {w:.2} {h:.2}\">\n{body}</svg>\n",
            w = self.width,
            h = self.height,
            x = self.view_min.0,
            y = self.view_min.1,
            body = self.body
        )
    }
}

/// Top `top_n` terms by count (ties in code-point order).
pub fn top_terms(frequencies: &BTreeMap<String, usize>, top_n: usize) -> Vec<(&str, usize)> {
    let mut terms: Vec<(&str, usize)> = frequencies.iter().map(|(t, &c)| (t.as_str(), c)).collect();
    // BTreeMap iteration is already in term order; stable sort keeps it for ties
    terms.sort_by_key(|t| std::cmp::Reverse(t.1));
    terms.truncate(top_n);
    terms
}

/// Vertical bars for the `top_n` most frequent terms, tallest first.
pub fn render_histogram(frequencies: &BTreeMap<String, usize>, top_n: usize) -> Result<String> {
    if frequencies.is_empty() {
        return Err(Error::InvalidInput("histogram of empty frequencies".into()));
    }
    let terms = top_terms(frequencies, top_n.max(1));
    let (bar_w, gap, plot_h, top, bottom, left) = (28.0, 8.0, 300.0, 30.0, 110.0, 40.0);
    let width = left * 2.0 + terms.len() as f64 * (bar_w + gap);
    let height = top + plot_h + bottom;
    let max = terms[0].1 as f64;
    let mut svg = Svg::new(width, height);
    svg.raw(&format!("<rect x=\"0\" y=\"0\" width=\"{width:.2}\" height=\"{height:.2}\" fill=\"#ffffff\"/>"));
    let base = top + plot_h;
    svg.raw(&format!(
        "<line x1=\"{left:.2}\" y1=\"{base:.2}\" x2=\"{:.2}\" y2=\"{base:.2}\" stroke=\"#333333\"/>",
        width - left
    ));
    for (i, (term, count)) in terms.iter().enumerate() {
        let x = left + gap / 2.0 + i as f64 * (bar_w + gap);
        let h = plot_h * *count as f64 / max;
        let y = base - h;
        let term = escape(term);
        svg.raw(&format!(
            "<rect class=\"bar\" data-term=\"{term}\" data-count=\"{count}\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"{bar_w:.2}\" height=\"{h:.2}\" fill=\"{}\"/>",
            PALETTE[0]
        ));
        let cx = x + bar_w / 2.0;
        svg.raw(&format!(
            "<text x=\"{cx:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\" {FONT}>{count}</text>",
            y - 4.0
        ));
        let ly = base + 10.0;
        svg.raw(&format!(
            "<text class=\"label\" x=\"{cx:.2}\" y=\"{ly:.2}\" font-size=\"12\" text-anchor=\"end\" direction=\"rtl\" unicode-bidi=\"embed\" transform=\"rotate(-60 {cx:.2} {ly:.2})\" {FONT}>{term}</text>"
        ));
    }
    Ok(svg.finish())
}

fn heat_color(v: f64) -> (u8, u8, u8) {
    let t = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let lo = (247.0, 251.0, 255.0);
    let hi = (8.0, 48.0, 107.0);
    let mix = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    (mix(lo.0, hi.0), mix(lo.1, hi.1), mix(lo.2, hi.2))
}

pub(crate) fn heat_fill(v: f64) -> String {
    let (r, g, b) = heat_color(v);
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// `n × n` grid; colour is linear in the value over `[0, 1]`.
pub fn render_heatmap(matrix: &SimilarityMatrix) -> String {
    let n = matrix.n();
    let cell = 22.0;
    let (left, top) = (40.0, 40.0);
    let legend_w = 70.0;
    let width = left + n as f64 * cell + legend_w + 20.0;
    let height = (top + n as f64 * cell + 20.0).max(top + 180.0);
    let mut svg = Svg::new(width, height);
    svg.raw(&format!("<rect x=\"0\" y=\"0\" width=\"{width:.2}\" height=\"{height:.2}\" fill=\"#ffffff\"/>"));
    svg.raw(&format!(
        "<defs><linearGradient id=\"heat\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\"><stop offset=\"0\" stop-color=\"{}\"/><stop offset=\"1\" stop-color=\"{}\"/></linearGradient></defs>",
        heat_fill(0.0),
        heat_fill(1.0)
    ));
    for (i, p) in matrix.poem_order.iter().enumerate() {
        let pos = i as f64 * cell + cell / 2.0;
        svg.raw(&format!(
            "<text class=\"axis\" x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\" {FONT}>{p}</text>",
            left + pos,
            top - 6.0
        ));
        svg.raw(&format!(
            "<text class=\"axis\" x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\" dominant-baseline=\"central\" {FONT}>{p}</text>",
            left - 6.0,
            top + pos
        ));
    }
    for i in 0..n {
        for j in 0..n {
            let v = matrix.get(i, j);
            svg.raw(&format!(
                "<rect class=\"cell\" data-row=\"{i}\" data-col=\"{j}\" data-value=\"{v:.6}\" x=\"{:.2}\" y=\"{:.2}\" width=\"{cell:.2}\" height=\"{cell:.2}\" fill=\"{}\"/>",
                left + j as f64 * cell,
                top + i as f64 * cell,
                heat_fill(v)
            ));
        }
    }
    let lx = left + n as f64 * cell + 20.0;
    svg.raw(&format!(
        "<rect class=\"legend\" x=\"{lx:.2}\" y=\"{top:.2}\" width=\"16\" height=\"120\" fill=\"url(#heat)\" stroke=\"#333333\"/>"
    ));
    svg.raw(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" {FONT}>1</text>",
        lx + 20.0,
        top + 8.0
    ));
    svg.raw(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" {FONT}>0</text>",
        lx + 20.0,
        top + 120.0
    ));
    svg.finish()
}

/// One marker per poem coloured by cluster, annotated with the poem index.
pub fn render_scatter(
    projection: &Projection2D,
    clusters: &ClusterAssignment,
    poem_indices: &[usize],
    titles: &[String],
) -> Result<String> {
    let n = projection.coords.len();
    for len in [clusters.labels.len(), poem_indices.len(), titles.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    let (plot, margin, legend_w) = (400.0, 40.0, 110.0);
    let width = plot + 2.0 * margin + legend_w;
    let height = plot + 2.0 * margin;
    let coord = |row: &Vec<f64>, c: usize| row.get(c).copied().unwrap_or(0.0);
    let range = |c: usize| {
        let lo = projection.coords.iter().map(|r| coord(r, c)).fold(f64::INFINITY, f64::min);
        let hi = projection.coords.iter().map(|r| coord(r, c)).fold(f64::NEG_INFINITY, f64::max);
        let span = if hi - lo > 1e-12 { hi - lo } else { 1.0 };
        (lo, span)
    };
    let ((x0, xs), (y0, ys)) = (range(0), range(1));
    let mut svg = Svg::new(width, height);
    svg.raw(&format!("<rect x=\"0\" y=\"0\" width=\"{width:.2}\" height=\"{height:.2}\" fill=\"#ffffff\"/>"));
    svg.raw(&format!(
        "<rect x=\"{margin:.2}\" y=\"{margin:.2}\" width=\"{plot:.2}\" height=\"{plot:.2}\" fill=\"none\" stroke=\"#999999\"/>"
    ));
    svg.raw(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" {FONT}>PC1</text>",
        margin + plot / 2.0,
        height - 10.0
    ));
    svg.raw(&format!(
        "<text x=\"14\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\" {FONT}>PC2</text>",
        margin + plot / 2.0,
        margin + plot / 2.0
    ));
    for (i, row) in projection.coords.iter().enumerate() {
        let x = margin + 10.0 + (plot - 20.0) * (coord(row, 0) - x0) / xs;
        let y = margin + plot - 10.0 - (plot - 20.0) * (coord(row, 1) - y0) / ys;
        let label = clusters.labels[i];
        svg.raw(&format!(
            "<circle class=\"marker\" data-poem=\"{}\" data-cluster=\"{label}\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"6\" fill=\"{}\"><title>{}</title></circle>",
            poem_indices[i],
            PALETTE[label % PALETTE.len()],
            escape(&titles[i])
        ));
        svg.raw(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" {FONT}>{}</text>",
            x + 8.0,
            y - 6.0,
            poem_indices[i]
        ));
    }
    let lx = margin * 2.0 + plot;
    for c in 0..clusters.k() {
        let y = margin + 10.0 + c as f64 * 20.0;
        svg.raw(&format!(
            "<circle class=\"legend\" data-cluster=\"{c}\" cx=\"{lx:.2}\" cy=\"{y:.2}\" r=\"6\" fill=\"{}\"/>",
            PALETTE[c % PALETTE.len()]
        ));
        svg.raw(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" dominant-baseline=\"central\" {FONT}>cluster {c}</text>",
            lx + 12.0,
            y
        ));
    }
    Ok(svg.finish())
}
