//! Word cloud layout: words in descending weight, each placed at the first
//! free position along an outward rectangular spiral centred on the origin.
//! Font size is linear in weight between `min_font` and `max_font`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::report::svg::{escape, Svg, PALETTE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudOptions {
    pub min_font: f64,
    pub max_font: f64,
    /// Spiral step in user units.
    pub step: f64,
    pub max_words: usize,
}

impl Default for CloudOptions {
    fn default() -> Self {
        Self {
            min_font: 12.0,
            max_font: 48.0,
            step: 2.0,
            max_words: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacedWord {
    pub text: String,
    pub weight: f64,
    pub font_size: f64,
    /// Centre of the box.
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl PlacedWord {
    pub fn overlaps(&self, other: &PlacedWord) -> bool {
        (self.x - other.x).abs() * 2.0 < self.width + other.width
            && (self.y - other.y).abs() * 2.0 < self.height + other.height
    }
}

/// Approximate advance of a glyph run; no font metrics are available.
fn text_box(text: &str, font_size: f64) -> (f64, f64) {
    let chars = text.chars().filter(|&c| c != '\u{200c}').count().max(1);
    (chars as f64 * font_size * 0.6, font_size * 1.2)
}

/// Visits lattice points on a rectangular spiral: right 1, down 1, left 2, up 2, right 3, ...
struct Spiral {
    x: i64,
    y: i64,
    dir: usize,
    leg: i64,
    walked: i64,
    legs_done: usize,
    started: bool,
}

impl Spiral {
    fn new() -> Self {
        Self {
            x: 0,
            y: 0,
            dir: 0,
            leg: 1,
            walked: 0,
            legs_done: 0,
            started: false,
        }
    }
}

impl Iterator for Spiral {
    type Item = (i64, i64);

    fn next(&mut self) -> Option<(i64, i64)> {
        if !self.started {
            self.started = true;
            return Some((0, 0));
        }
        const DIRS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
        let (dx, dy) = DIRS[self.dir];
        self.x += dx;
        self.y += dy;
        self.walked += 1;
        if self.walked == self.leg {
            self.walked = 0;
            self.dir = (self.dir + 1) % 4;
            self.legs_done += 1;
            if self.legs_done.is_multiple_of(2) {
                self.leg += 1;
            }
        }
        Some((self.x, self.y))
    }
}

pub fn layout_wordcloud(words: &[(String, f64)], options: &CloudOptions) -> Result<Vec<PlacedWord>> {
    if words.is_empty() {
        return Err(Error::InvalidInput("word cloud of empty frequencies".into()));
    }
    let mut sorted: Vec<&(String, f64)> = words.iter().collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    sorted.truncate(options.max_words.max(1));
    let hi = sorted[0].1;
    let lo = sorted.last().expect("non-empty").1;
    let mut placed: Vec<PlacedWord> = Vec::with_capacity(sorted.len());
    for (text, weight) in sorted {
        let font_size = if hi > lo {
            options.min_font + (options.max_font - options.min_font) * (weight - lo) / (hi - lo)
        } else {
            options.max_font
        };
        let (width, height) = text_box(text, font_size);
        let mut candidate = PlacedWord {
            text: text.clone(),
            weight: *weight,
            font_size,
            x: 0.0,
            y: 0.0,
            width,
            height,
        };
        // the spiral always reaches free space eventually; the cap is a guard
        let spot = Spiral::new().take(4_000_000).find(|&(gx, gy)| {
            candidate.x = gx as f64 * options.step;
            candidate.y = gy as f64 * options.step;
            !placed.iter().any(|p| p.overlaps(&candidate))
        });
        if spot.is_some() {
            placed.push(candidate);
        } else {
            log::warn!("word cloud: no room for {text:?}");
        }
    }
    Ok(placed)
}

pub fn render_wordcloud(words: &[(String, f64)], options: &CloudOptions) -> Result<String> {
    let placed = layout_wordcloud(words, options)?;
    let pad = 10.0;
    let min_x = placed.iter().map(|w| w.x - w.width / 2.0).fold(f64::INFINITY, f64::min) - pad;
    let max_x = placed.iter().map(|w| w.x + w.width / 2.0).fold(f64::NEG_INFINITY, f64::max) + pad;
    let min_y = placed.iter().map(|w| w.y - w.height / 2.0).fold(f64::INFINITY, f64::min) - pad;
    let max_y = placed.iter().map(|w| w.y + w.height / 2.0).fold(f64::NEG_INFINITY, f64::max) + pad;
    let mut svg = Svg::with_view(min_x, min_y, max_x - min_x, max_y - min_y);
    svg.raw(&format!(
        "<rect x=\"{min_x:.2}\" y=\"{min_y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#ffffff\"/>",
        max_x - min_x,
        max_y - min_y
    ));
    for (i, w) in placed.iter().enumerate() {
        let mut line = String::new();
        write!(
            line,
            "<text class=\"word\" data-box=\"{:.2} {:.2} {:.2} {:.2}\" x=\"{:.2}\" y=\"{:.2}\" font-size=\"{:.2}\" fill=\"{}\" text-anchor=\"middle\" dominant-baseline=\"central\" direction=\"rtl\" unicode-bidi=\"embed\" font-family=\"sans-serif\">{}</text>",
            w.x - w.width / 2.0,
            w.y - w.height / 2.0,
            w.width,
            w.height,
            w.x,
            w.y,
            w.font_size,
            PALETTE[i % PALETTE.len()],
            escape(&w.text)
        )
        .unwrap();
        svg.raw(&line);
    }
    Ok(svg.finish())
}
