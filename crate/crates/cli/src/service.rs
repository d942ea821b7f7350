//! Read-only JSON/SVG service over an immutable snapshot loaded at startup.

use std::collections::HashMap;
use std::io;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::header::{HeaderValue, ACCESS_CONTROL_ALLOW_ORIGIN, CONTENT_TYPE};
use axum::http::StatusCode;
use axum::middleware;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use intermap_core::{DatasetSnapshot, Layer, Palette, RenderSpec, Thresholds, UserOrdering};
use thiserror::Error;

use crate::api::{self, ApiError};
use crate::load::{load_snapshot, LoadError};

const JSON: &str = "application/json";
const SVG: &str = "image/svg+xml";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_path: PathBuf,
    pub port: u16,
    pub bind_address: IpAddr,
    pub thresholds: Thresholds,
    pub render: RenderSpec,
}

impl ServiceConfig {
    pub fn new(data_path: impl Into<PathBuf>) -> Self {
        Self {
            data_path: data_path.into(),
            port: 8080,
            bind_address: IpAddr::V4(Ipv4Addr::LOCALHOST),
            thresholds: Thresholds::default(),
            render: RenderSpec::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: SocketAddr, source: io::Error },
    #[error("server failed: {0}")]
    Serve(io::Error),
}

#[derive(Debug, Clone)]
pub struct AppState {
    snapshot: Arc<DatasetSnapshot>,
    thresholds: Thresholds,
    render: RenderSpec,
}

impl AppState {
    pub fn new(snapshot: DatasetSnapshot, thresholds: Thresholds, render: RenderSpec) -> Self {
        Self {
            snapshot: Arc::new(snapshot),
            thresholds,
            render,
        }
    }

    pub fn snapshot(&self) -> &DatasetSnapshot {
        &self.snapshot
    }
}

type Params = Query<HashMap<String, String>>;

fn reply(result: Result<String, ApiError>, content_type: &'static str) -> Response {
    match result {
        Ok(body) => ([(CONTENT_TYPE, content_type)], body).into_response(),
        Err(e) => error_response(&e),
    }
}

fn error_response(e: &ApiError) -> Response {
    let status = StatusCode::from_u16(e.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, [(CONTENT_TYPE, JSON)], e.body()).into_response()
}

pub fn parse_ordering(q: &HashMap<String, String>) -> Result<UserOrdering, ApiError> {
    match q.get("order") {
        None => Ok(UserOrdering::default()),
        Some(v) => v.parse().map_err(|_| ApiError::InvalidOrdering(v.clone())),
    }
}

fn parse_layer(q: &HashMap<String, String>, default: Layer) -> Result<Layer, ApiError> {
    match q.get("layer") {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| ApiError::InvalidLayer(v.clone())),
    }
}

fn parse_number<T: std::str::FromStr>(
    q: &HashMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, ApiError> {
    match q.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| {
            ApiError::InvalidThreshold(format!("`{key}` must be a number, got `{v}`"))
        }),
    }
}

/// Threshold overrides from `alpha`, `tau_share`, `min_users` and
/// `scan_min_users`, range-checked.
pub fn parse_thresholds(
    q: &HashMap<String, String>,
    base: Thresholds,
) -> Result<Thresholds, ApiError> {
    let t = Thresholds {
        alpha: parse_number(q, "alpha", base.alpha)?,
        tau_share: parse_number(q, "tau_share", base.tau_share)?,
        min_users: parse_number(q, "min_users", base.min_users)?,
        scan_min_users: parse_number(q, "scan_min_users", base.scan_min_users)?,
    };
    t.validate()?;
    Ok(t)
}

pub fn parse_render(q: &HashMap<String, String>, base: RenderSpec) -> Result<RenderSpec, ApiError> {
    let cell_px = match q.get("cell_px") {
        None => base.cell_px,
        Some(v) => match v.parse::<u32>() {
            Ok(px) if px >= 4 => px,
            _ => return Err(ApiError::InvalidCellPx(v.clone())),
        },
    };
    let palette = match q.get("palette") {
        None => base.palette,
        Some(v) => v
            .parse::<Palette>()
            .map_err(|_| ApiError::InvalidPalette(v.clone()))?,
    };
    Ok(RenderSpec {
        layer: parse_layer(q, base.layer)?,
        cell_px,
        palette,
        ..base
    })
}

async fn forums(State(state): State<AppState>) -> Response {
    reply(Ok(api::forums_json(&state.snapshot)), JSON)
}

async fn healthz(State(state): State<AppState>) -> Response {
    reply(Ok(api::health_json(&state.snapshot)), JSON)
}

async fn matrix(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Params,
) -> Response {
    let result = (|| {
        if state.snapshot.forum(&id).is_none() {
            return Err(ApiError::UnknownForum(id.clone()));
        }
        let ordering = parse_ordering(&q)?;
        // the matrix carries every layer; the token is only validated
        parse_layer(&q, Layer::default())?;
        api::matrix_json(&state.snapshot, &id, ordering)
    })();
    reply(result, JSON)
}

async fn metrics(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Params,
) -> Response {
    let result = (|| {
        if state.snapshot.forum(&id).is_none() {
            return Err(ApiError::UnknownForum(id.clone()));
        }
        let thresholds = parse_thresholds(&q, state.thresholds)?;
        api::metrics_json(&state.snapshot, &id, &thresholds)
    })();
    reply(result, JSON)
}

async fn render(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Params,
) -> Response {
    let result = (|| {
        if state.snapshot.forum(&id).is_none() {
            return Err(ApiError::UnknownForum(id.clone()));
        }
        let ordering = parse_ordering(&q)?;
        let spec = parse_render(&q, state.render)?;
        api::render_svg(&state.snapshot, &id, ordering, &spec)
    })();
    reply(result, SVG)
}

async fn not_found() -> Response {
    error_response(&ApiError::NotFound)
}

async fn method_not_allowed() -> Response {
    error_response(&ApiError::MethodNotAllowed)
}

async fn allow_any_origin(mut response: Response) -> Response {
    response
        .headers_mut()
        .insert(ACCESS_CONTROL_ALLOW_ORIGIN, HeaderValue::from_static("*"));
    response
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/forums", get(forums))
        .route("/forums/{id}/matrix", get(matrix))
        .route("/forums/{id}/metrics", get(metrics))
        .route("/forums/{id}/render.svg", get(render))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(middleware::map_response(allow_any_origin))
        .with_state(state)
}

/// Validates the configuration and loads the corpus; any failure is fatal.
pub fn prepare(config: &ServiceConfig) -> Result<AppState, ServiceError> {
    config
        .thresholds
        .validate()
        .map_err(|e| ServiceError::Config(e.to_string()))?;
    config
        .render
        .validate()
        .map_err(|e| ServiceError::Config(e.to_string()))?;
    let (snapshot, report) = load_snapshot(&config.data_path)?;
    if !report.rejected.is_empty() {
        tracing::warn!(
            rejected = report.rejected.len(),
            path = %config.data_path.display(),
            "corpus lines rejected at startup"
        );
    }
    tracing::info!(
        forums = snapshot.forums().len(),
        records = snapshot.total_records(),
        "corpus loaded"
    );
    Ok(AppState::new(snapshot, config.thresholds, config.render))
}

pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = prepare(&config)?;
    let addr = SocketAddr::new(config.bind_address, config.port);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServiceError::Serve)
}
