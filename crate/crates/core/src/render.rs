//! Deterministic SVG heat maps of an [`InteractionMatrix`].
//!
//! Output is SVG 1.1 with integer coordinates and no external references.
//! Cells are emitted row-major; every grid position, diagonal included,
//! carries `data-from`/`data-to` index attributes for hit-testing.

use std::borrow::Cow;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::matrix::{make_color_scale, ColorScale, InteractionMatrix, DEFAULT_BUCKETS};
use crate::model::{Label, SentimentLabel, TrustLabel};

const MARGIN: u32 = 10;
const LEGEND_GAP: u32 = 16;
const LEGEND_FONT: u32 = 10;
const LEGEND_CHAR_W: u32 = 6;
const LEGEND_ROW: u32 = 16;
const SWATCH: u32 = 12;
const GRID_STROKE: &str = "#d9d9d9";
const EMPTY_FILL: &str = "#ffffff";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("{n} users exceed the render cap of {cap}; export the data instead")]
    TooManyUsers { n: usize, cap: usize },
    #[error("matrix has no interactions")]
    EmptyMatrix,
    #[error("{layer} layer cannot use a {scale} legend")]
    LayerScaleMismatch { layer: Layer, scale: &'static str },
    #[error("invalid render spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid {kind} `{value}`")]
pub struct InvalidToken {
    pub kind: &'static str,
    pub value: String,
}

/// Which coded attribute colors the cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Layer {
    #[default]
    Frequency,
    Trust,
    Sentiment,
}

impl Layer {
    pub const ALL: [Self; 3] = [Self::Frequency, Self::Trust, Self::Sentiment];

    pub fn token(self) -> &'static str {
        match self {
            Self::Frequency => "frequency",
            Self::Trust => "trust",
            Self::Sentiment => "sentiment",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Layer {
    type Err = InvalidToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.token() == s)
            .ok_or_else(|| InvalidToken {
                kind: "layer",
                value: s.to_owned(),
            })
    }
}

/// Sequential ramp for the frequency layer, light to dark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Palette {
    #[default]
    Blues,
    Heat,
}

impl Palette {
    pub const ALL: [Self; 2] = [Self::Blues, Self::Heat];

    pub fn token(self) -> &'static str {
        match self {
            Self::Blues => "blues",
            Self::Heat => "heat",
        }
    }

    fn ramp(self) -> &'static [&'static str] {
        match self {
            Self::Blues => &[
                "#deebf7", "#c6dbef", "#9ecae1", "#6baed6", "#4292c6", "#2171b5", "#08519c",
                "#08306b",
            ],
            Self::Heat => &[
                "#ffeda0", "#fed976", "#feb24c", "#fd8d3c", "#fc4e2a", "#e31a1c", "#bd0026",
                "#800026",
            ],
        }
    }

    /// Fill for a frequency bucket; bucket 0 is the empty background.
    pub fn bucket_color(self, bucket: usize, bucket_count: usize) -> &'static str {
        if bucket == 0 {
            return EMPTY_FILL;
        }
        let ramp = self.ramp();
        let steps = (bucket_count - 2).max(1);
        ramp[((bucket - 1) * (ramp.len() - 1)) / steps]
    }
}

impl FromStr for Palette {
    type Err = InvalidToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.token() == s)
            .ok_or_else(|| InvalidToken {
                kind: "palette",
                value: s.to_owned(),
            })
    }
}

pub fn trust_color(label: TrustLabel) -> &'static str {
    match label {
        TrustLabel::Trust => "#1a9850",
        TrustLabel::NeutralTrust => "#969696",
        TrustLabel::Mistrust => "#d73027",
    }
}

pub fn sentiment_color(label: SentimentLabel) -> &'static str {
    match label {
        SentimentLabel::Positive => "#1a9850",
        SentimentLabel::Negative => "#d73027",
        SentimentLabel::NeutralSentiment => "#969696",
        SentimentLabel::Unrelated => "#4575b4",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RenderSpec {
    pub layer: Layer,
    pub cell_px: u32,
    pub palette: Palette,
    pub show_labels: bool,
    pub show_legend: bool,
    pub max_render_users: usize,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            layer: Layer::Frequency,
            cell_px: 14,
            palette: Palette::Blues,
            show_labels: true,
            show_legend: true,
            max_render_users: 500,
        }
    }
}

impl RenderSpec {
    pub fn validate(&self) -> Result<(), RenderError> {
        if self.cell_px < 4 {
            return Err(RenderError::InvalidSpec(format!(
                "cell_px must be at least 4, got {}",
                self.cell_px
            )));
        }
        if self.max_render_users < 2 {
            return Err(RenderError::InvalidSpec(format!(
                "max_render_users must be at least 2, got {}",
                self.max_render_users
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SvgDocument {
    pub content: String,
    pub width: u32,
    pub height: u32,
}

/// A positioned-at-origin piece of SVG with its extent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SvgFragment {
    pub content: String,
    pub width: u32,
    pub height: u32,
}

/// What a legend explains.
#[derive(Debug, Clone, Copy)]
pub enum LegendScale<'a> {
    Frequency(&'a ColorScale),
    Trust,
    Sentiment,
}

impl LegendScale<'_> {
    fn kind(&self) -> &'static str {
        match self {
            Self::Frequency(_) => "frequency",
            Self::Trust => "trust",
            Self::Sentiment => "sentiment",
        }
    }
}

fn escape(text: &str) -> Cow<'_, str> {
    if !text.contains(['&', '<', '>', '"', '\'']) {
        return Cow::Borrowed(text);
    }
    let mut out = String::with_capacity(text.len() + 8);
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
    Cow::Owned(out)
}

/// Legend swatches: frequency buckets low to high, or labels in taxonomy
/// order.
pub fn render_legend(
    spec: &RenderSpec,
    scale: LegendScale<'_>,
) -> Result<SvgFragment, RenderError> {
    let entries: Vec<(String, &'static str)> = match (spec.layer, scale) {
        (Layer::Frequency, LegendScale::Frequency(s)) => s
            .legend_labels()
            .into_iter()
            .enumerate()
            .map(|(b, label)| (label, spec.palette.bucket_color(b, s.bucket_count())))
            .collect(),
        (Layer::Trust, LegendScale::Trust) => TrustLabel::ALL
            .iter()
            .map(|&l| (l.token().to_owned(), trust_color(l)))
            .collect(),
        (Layer::Sentiment, LegendScale::Sentiment) => SentimentLabel::ALL
            .iter()
            .map(|&l| (l.token().to_owned(), sentiment_color(l)))
            .collect(),
        (layer, scale) => {
            return Err(RenderError::LayerScaleMismatch {
                layer,
                scale: scale.kind(),
            })
        }
    };
    let title = match spec.layer {
        Layer::Frequency => "interactions",
        Layer::Trust => "trust",
        Layer::Sentiment => "sentiment",
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<g class="legend" font-size="{LEGEND_FONT}"><text x="0" y="{LEGEND_FONT}">{title}</text>"#
    );
    let mut widest = title.len() as u32 * LEGEND_CHAR_W;
    for (k, (label, fill)) in entries.iter().enumerate() {
        let y = LEGEND_ROW * (k as u32 + 1);
        let _ = writeln!(
            out,
            r#"<rect class="swatch" x="0" y="{y}" width="{SWATCH}" height="{SWATCH}" fill="{fill}" stroke="{GRID_STROKE}"/><text x="{tx}" y="{ty}">{label}</text>"#,
            tx = SWATCH + 6,
            ty = y + SWATCH - 2,
            label = escape(label),
        );
        widest = widest.max(SWATCH + 6 + label.chars().count() as u32 * LEGEND_CHAR_W);
    }
    out.push_str("</g>\n");
    Ok(SvgFragment {
        content: out,
        width: widest,
        height: LEGEND_ROW * (entries.len() as u32 + 1),
    })
}

/// Renders the full heat map: axis labels, the N×N grid, and the legend.
pub fn render_matrix_svg(
    matrix: &InteractionMatrix,
    spec: &RenderSpec,
) -> Result<SvgDocument, RenderError> {
    spec.validate()?;
    let n = matrix.n();
    if n > spec.max_render_users {
        return Err(RenderError::TooManyUsers {
            n,
            cap: spec.max_render_users,
        });
    }
    if matrix.total_count() == 0 {
        return Err(RenderError::EmptyMatrix);
    }

    let cell = spec.cell_px;
    let font = (cell - 2).clamp(4, 12);
    let char_w = font * 6 / 10 + 1;
    let label_band = if spec.show_labels {
        let longest = matrix
            .users()
            .iter()
            .map(|u| u.as_str().chars().count())
            .max()
            .unwrap_or(0);
        longest as u32 * char_w + 6
    } else {
        0
    };
    let grid = n as u32 * cell;
    let x0 = MARGIN + label_band;
    let y0 = MARGIN + label_band;

    let scale = make_color_scale(matrix.max_count(), DEFAULT_BUCKETS);
    let legend = if spec.show_legend {
        let kind = match spec.layer {
            Layer::Frequency => LegendScale::Frequency(&scale),
            Layer::Trust => LegendScale::Trust,
            Layer::Sentiment => LegendScale::Sentiment,
        };
        Some(render_legend(spec, kind)?)
    } else {
        None
    };

    let legend_w = legend.as_ref().map_or(0, |l| LEGEND_GAP + l.width);
    let legend_h = legend.as_ref().map_or(0, |l| l.height);
    let width = x0 + grid + legend_w + MARGIN;
    let height = y0 + grid.max(legend_h) + MARGIN;

    // rough per-cell budget keeps large renders from reallocating
    let mut out = String::with_capacity(256 + n * n * 120);
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        out,
        "<title>{} ({})</title>",
        escape(matrix.forum().as_str()),
        spec.layer
    );
    let _ = writeln!(
        out,
        r#"<rect class="background" x="0" y="0" width="{width}" height="{height}" fill="{EMPTY_FILL}"/>"#
    );

    if spec.show_labels {
        let _ = writeln!(
            out,
            r#"<g class="row-labels" font-size="{font}" text-anchor="end">"#
        );
        for (i, user) in matrix.users().iter().enumerate() {
            let y = y0 + i as u32 * cell + cell / 2 + font / 3;
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{y}">{}</text>"#,
                x0 - 4,
                escape(user.as_str())
            );
        }
        out.push_str("</g>\n");
        let _ = writeln!(
            out,
            r#"<g class="col-labels" font-size="{font}" text-anchor="start">"#
        );
        for (j, user) in matrix.users().iter().enumerate() {
            let x = x0 + j as u32 * cell + cell / 2 + font / 3;
            let _ = writeln!(
                out,
                r#"<text transform="translate({x},{}) rotate(-90)">{}</text>"#,
                y0 - 4,
                escape(user.as_str())
            );
        }
        out.push_str("</g>\n");
    }

    let _ = writeln!(
        out,
        r#"<g class="matrix" transform="translate({x0},{y0})">"#
    );
    for i in 0..n {
        let y = i as u32 * cell;
        for j in 0..n {
            let x = j as u32 * cell;
            if i == j {
                let _ = writeln!(
                    out,
                    r#"<text class="diagonal" data-from="{i}" data-to="{j}" x="{cx}" y="{cy}" font-size="{font}" text-anchor="middle">X</text>"#,
                    cx = x + cell / 2,
                    cy = y + cell / 2 + font / 3,
                );
                continue;
            }
            let geometry = format!(r#"x="{x}" y="{y}" width="{cell}" height="{cell}""#);
            match matrix.cell(i, j) {
                None => {
                    let _ = writeln!(
                        out,
                        r#"<rect class="cell empty" data-from="{i}" data-to="{j}" {geometry} fill="none" stroke="{GRID_STROKE}"/>"#
                    );
                }
                Some(agg) => {
                    let count = agg.count();
                    let (extra, fill) = match spec.layer {
                        Layer::Frequency => {
                            let bucket = scale.bucket(count);
                            (
                                format!(r#"data-bucket="{bucket}""#),
                                spec.palette.bucket_color(bucket, scale.bucket_count()),
                            )
                        }
                        Layer::Trust => {
                            let label = agg.dominant_trust();
                            (
                                format!(r#"data-label="{}""#, label.token()),
                                trust_color(label),
                            )
                        }
                        Layer::Sentiment => {
                            let label = agg.dominant_sentiment();
                            (
                                format!(r#"data-label="{}""#, label.token()),
                                sentiment_color(label),
                            )
                        }
                    };
                    let _ = writeln!(
                        out,
                        r#"<rect class="cell" data-from="{i}" data-to="{j}" data-count="{count}" {extra} {geometry} fill="{fill}" stroke="{GRID_STROKE}"/>"#
                    );
                }
            }
        }
    }
    out.push_str("</g>\n");

    if let Some(legend) = legend {
        let _ = writeln!(
            out,
            r#"<g transform="translate({},{y0})">"#,
            x0 + grid + LEGEND_GAP
        );
        out.push_str(&legend.content);
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");

    Ok(SvgDocument {
        content: out,
        width,
        height,
    })
}
