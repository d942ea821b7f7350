//! Response bodies shared by the CLI and the HTTP service. Both front ends
//! call these functions, so equal parameters give equal bytes.

use std::fmt;

use intermap_core::metrics::MetricsError;
use intermap_core::{
    build_matrix, pattern_report, render_matrix_svg, DatasetSnapshot, InteractionMatrix,
    RenderError, RenderSpec, Thresholds, UserOrdering,
};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApiError {
    #[error("unknown forum `{0}`")]
    UnknownForum(String),
    #[error(
        "invalid ordering `{0}`; expected first_appearance, activity_descending or lexicographic"
    )]
    InvalidOrdering(String),
    #[error("invalid layer `{0}`; expected frequency, trust or sentiment")]
    InvalidLayer(String),
    #[error("invalid palette `{0}`; expected blues or heat")]
    InvalidPalette(String),
    #[error("{0}")]
    InvalidThreshold(String),
    #[error("cell_px must be an integer of at least 4, got `{0}`")]
    InvalidCellPx(String),
    #[error("{n} users exceed the render cap of {cap}; use the matrix JSON instead")]
    TooManyUsers { n: usize, cap: usize },
    #[error("no such route")]
    NotFound,
    #[error("method not allowed")]
    MethodNotAllowed,
    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    pub fn token(&self) -> &'static str {
        match self {
            Self::UnknownForum(_) => "unknown_forum",
            Self::InvalidOrdering(_) => "invalid_ordering",
            Self::InvalidLayer(_) => "invalid_layer",
            Self::InvalidPalette(_) => "invalid_palette",
            Self::InvalidThreshold(_) => "invalid_threshold",
            Self::InvalidCellPx(_) => "invalid_cell_px",
            Self::TooManyUsers { .. } => "too_many_users",
            Self::NotFound => "not_found",
            Self::MethodNotAllowed => "method_not_allowed",
            Self::Internal(_) => "internal",
        }
    }

    pub fn status(&self) -> u16 {
        match self {
            Self::UnknownForum(_) | Self::NotFound => 404,
            Self::MethodNotAllowed => 405,
            Self::TooManyUsers { .. } => 413,
            Self::Internal(_) => 500,
            _ => 400,
        }
    }

    /// `{"error": token, ...}` with a trailing newline.
    pub fn body(&self) -> String {
        let value = match self {
            Self::TooManyUsers { n, cap } => json!({ "error": self.token(), "n": n, "cap": cap }),
            _ => json!({ "error": self.token(), "message": self.to_string() }),
        };
        line(value)
    }
}

impl From<RenderError> for ApiError {
    fn from(e: RenderError) -> Self {
        match e {
            RenderError::TooManyUsers { n, cap } => Self::TooManyUsers { n, cap },
            RenderError::InvalidSpec(msg) => Self::InvalidCellPx(msg),
            other => Self::Internal(other.to_string()),
        }
    }
}

impl From<MetricsError> for ApiError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::InvalidThreshold { .. } => Self::InvalidThreshold(e.to_string()),
            other => Self::Internal(other.to_string()),
        }
    }
}

fn line(value: impl fmt::Display) -> String {
    format!("{value}\n")
}

pub fn forums_json(snapshot: &DatasetSnapshot) -> String {
    line(serde_json::to_string(snapshot.forums()).expect("forum list serializes"))
}

pub fn health_json(snapshot: &DatasetSnapshot) -> String {
    line(json!({ "status": "ok", "forums": snapshot.forums().len() }))
}

pub fn forum_matrix(
    snapshot: &DatasetSnapshot,
    forum: &str,
    ordering: UserOrdering,
) -> Result<InteractionMatrix, ApiError> {
    let records = snapshot
        .forum_records(forum)
        .map_err(|_| ApiError::UnknownForum(forum.to_owned()))?;
    build_matrix(records, ordering).map_err(|e| ApiError::Internal(e.to_string()))
}

pub fn matrix_json(
    snapshot: &DatasetSnapshot,
    forum: &str,
    ordering: UserOrdering,
) -> Result<String, ApiError> {
    Ok(line(forum_matrix(snapshot, forum, ordering)?.to_json()))
}

/// Scores do not depend on axis order, so the default ordering is used.
pub fn metrics_json(
    snapshot: &DatasetSnapshot,
    forum: &str,
    thresholds: &Thresholds,
) -> Result<String, ApiError> {
    thresholds.validate()?;
    let matrix = forum_matrix(snapshot, forum, UserOrdering::default())?;
    Ok(line(pattern_report(&matrix, thresholds)?.to_json()))
}

pub fn render_svg(
    snapshot: &DatasetSnapshot,
    forum: &str,
    ordering: UserOrdering,
    spec: &RenderSpec,
) -> Result<String, ApiError> {
    let matrix = forum_matrix(snapshot, forum, ordering)?;
    Ok(render_matrix_svg(&matrix, spec)?.content)
}
