//! Interaction-matrix analytics for threaded discussion forums.
//!
//! Records are ingested from CSV into a [`DatasetSnapshot`], aggregated per
//! forum into an [`InteractionMatrix`], scored by [`pattern_report`], and
//! drawn by [`render_matrix_svg`].

pub mod fixture;
pub mod ingest;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod render;

pub use fixture::{generate_fixture, FixtureError, FixtureSpec, Regime, RegimePlan};
pub use ingest::{
    forum_records, ingest_csv, list_forums, DatasetSnapshot, ForumMeta, IngestError, IngestReport,
    Rejection, RowError, UnknownForum, CSV_HEADER,
};
pub use matrix::{
    build_matrix, make_color_scale, CellAggregate, ColorScale, InteractionMatrix, MatrixError,
    UserOrdering, DEFAULT_BUCKETS,
};
pub use metrics::{
    classify, detect_scan_lines, dispersion_scores, pattern_report, report_all, symmetry_scores,
    Classification, DispersionScores, MetricsError, PatternReport, ScanLineReport, SymmetryScores,
    Thresholds,
};
pub use model::{
    ForumId, InteractionRecord, Label, RecordError, SentimentLabel, TrustLabel, UserId,
};
pub use render::{
    render_legend, render_matrix_svg, Layer, Palette, RenderError, RenderSpec, SvgDocument,
};
