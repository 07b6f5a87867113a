//! HTTP/JSON front end for the SLD pipeline.
//!
//! Routes:
//! - `POST /api/v1/compute` takes a self-contained job and returns the result
//!   document; the computation hash comes back in the `x-sld-hash` header.
//! - `POST /api/v1/classify` classifies a point against a cached or inline job.
//! - `GET /api/v1/catalog` lists materials and example tools.
//! - `GET /api/v1/health`.

mod cache;
mod error;
mod hash;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, HeaderName, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sld_core::cutting::{CoefficientDb, CoefficientSource};
use sld_core::io::{result_document, run_job, JobFile, VerdictDoc, DEFAULT_COEFFICIENT_DB};
use sld_core::stability::OperatingPoint;
use sld_core::tool_model::ToolFile;
use sld_core::uncertainty::classify_probabilistic;
use sld_core::units;
use tower_http::cors::{Any, CorsLayer};
use tower_http::timeout::TimeoutLayer;

pub use cache::{Computation, SessionCache};
pub use error::ApiError;
pub use hash::{canonical_json, request_hash};

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_CACHE_SIZE: usize = 64;
/// Largest accepted request body.
pub const DEFAULT_BODY_LIMIT: usize = 2 * 1024 * 1024;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);
pub const HASH_HEADER: &str = "x-sld-hash";

const EXAMPLE_TOOLS: [&str; 2] = [
    include_str!("../../../data/tools/endmill_12mm_2f.json"),
    include_str!("../../../data/tools/endmill_16mm_4f.json"),
];

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] sld_core::SldError),
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub port: u16,
    /// Falls back to the built-in database.
    pub coefficient_db: Option<PathBuf>,
    pub cache_size: usize,
    /// Origin allowed to make cross-origin requests; `*` allows any.
    pub allowed_origin: Option<String>,
    pub request_timeout: Duration,
    pub body_limit: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            port: DEFAULT_PORT,
            coefficient_db: None,
            cache_size: DEFAULT_CACHE_SIZE,
            allowed_origin: None,
            request_timeout: DEFAULT_TIMEOUT,
            body_limit: DEFAULT_BODY_LIMIT,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    db: Arc<CoefficientDb>,
    cache: Arc<SessionCache>,
}

impl AppState {
    pub fn new(db: CoefficientDb, cache_size: usize) -> Self {
        AppState {
            db: Arc::new(db),
            cache: Arc::new(SessionCache::new(cache_size)),
        }
    }

    pub fn from_config(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let db = match &config.coefficient_db {
            Some(path) => CoefficientDb::load(path)?,
            None => CoefficientDb::from_json(DEFAULT_COEFFICIENT_DB)?,
        };
        Ok(AppState::new(db, config.cache_size))
    }

    pub fn cache(&self) -> &SessionCache {
        &self.cache
    }
}

pub fn router(state: AppState, config: &ServiceConfig) -> Result<Router, ServiceError> {
    let mut app = Router::new()
        .route("/api/v1/compute", post(handle_compute))
        .route("/api/v1/classify", post(handle_classify))
        .route("/api/v1/catalog", get(handle_catalog))
        .route("/api/v1/health", get(handle_health))
        .with_state(state)
        .layer(DefaultBodyLimit::max(config.body_limit))
        .layer(TimeoutLayer::with_status_code(
            StatusCode::REQUEST_TIMEOUT,
            config.request_timeout,
        ));
    if let Some(origin) = &config.allowed_origin {
        let cors = CorsLayer::new()
            .allow_methods([Method::GET, Method::POST])
            .allow_headers([header::CONTENT_TYPE])
            .expose_headers([HeaderName::from_static(HASH_HEADER)]);
        let cors = if origin == "*" {
            cors.allow_origin(Any)
        } else {
            let value = HeaderValue::from_str(origin)
                .map_err(|_| ServiceError::Config(format!("invalid origin {origin:?}")))?;
            cors.allow_origin(value)
        };
        app = app.layer(cors);
    }
    Ok(app)
}

/// Binds `0.0.0.0:port` and serves until the process exits.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = AppState::from_config(&config)?;
    let app = router(state, &config)?;
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("sld service listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}

fn parse_body(body: Result<Bytes, BytesRejection>) -> Result<Value, ApiError> {
    let body = body.map_err(|r| ApiError::new(r.status(), "payload", r.body_text()))?;
    serde_json::from_slice(&body).map_err(|e| ApiError::validation(format!("malformed JSON: {e}"), Some(String::new())))
}

/// Returns the cached computation for `job`, computing it on a miss.
async fn computation(state: &AppState, job: Value) -> Result<(String, Arc<Computation>), ApiError> {
    let hash = request_hash(&job);
    if let Some(hit) = state.cache.get(&hash) {
        return Ok((hash, hit));
    }
    let db = state.db.clone();
    let computed = tokio::task::spawn_blocking(move || -> Result<Computation, ApiError> {
        let file = JobFile::from_json(&job.to_string()).map_err(ApiError::from_job)?;
        let spec = file.resolve(None, &db).map_err(ApiError::from_job)?;
        let result = run_job(&spec).map_err(ApiError::from_job)?;
        let doc = result_document(&result);
        let body = serde_json::to_vec(&doc).map_err(|e| ApiError::internal(e.to_string()))?;
        Ok(Computation {
            body: Bytes::from(body),
            band: result.band,
        })
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    let entry = state.cache.insert(hash.clone(), computed);
    Ok((hash, entry))
}

async fn handle_compute(
    State(state): State<AppState>,
    body: Result<Bytes, BytesRejection>,
) -> Result<Response, ApiError> {
    let job = parse_body(body)?;
    let (hash, entry) = computation(&state, job).await?;
    Ok((
        StatusCode::OK,
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("application/json")),
            (
                HeaderName::from_static(HASH_HEADER),
                HeaderValue::from_str(&hash).expect("hex digest"),
            ),
        ],
        entry.body.clone(),
    )
        .into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifyRequest {
    hash: Option<String>,
    job: Option<Value>,
    point: PointRequest,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointRequest {
    n_rpm: f64,
    ap_mm: f64,
}

async fn handle_classify(
    State(state): State<AppState>,
    body: Result<Bytes, BytesRejection>,
) -> Result<Json<VerdictDoc>, ApiError> {
    let value = parse_body(body)?;
    let request: ClassifyRequest = sld_core::io::parse_json(&value.to_string()).map_err(ApiError::from_job)?;
    let point = OperatingPoint::new(request.point.n_rpm, units::mm_to_m(request.point.ap_mm))
        .map_err(|e| ApiError::validation(e.to_string(), Some("/point".into())))?;
    let entry = match (request.hash, request.job) {
        (Some(hash), _) => state.cache.get(&hash).ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown_computation",
                format!("no cached computation {hash:?}; POST the job to /api/v1/compute first"),
            )
            .with_path("/hash")
        })?,
        (None, Some(job)) => computation(&state, job).await?.1,
        (None, None) => {
            return Err(ApiError::validation("either hash or job is required", Some(String::new())));
        }
    };
    let verdict = classify_probabilistic(&point, &entry.band).map_err(|e| {
        ApiError::new(StatusCode::BAD_REQUEST, "out_of_range", e.to_string()).with_path("/point/n_rpm")
    })?;
    Ok(Json(VerdictDoc {
        n_rpm: point.spindle_speed,
        ap_mm: request.point.ap_mm,
        class: verdict.class,
        p_stable: verdict.p_stable,
        margin_mm: units::m_to_mm(verdict.margin),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CatalogMaterial {
    pub name: String,
    pub sources: Vec<CoefficientSource>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Catalog {
    pub materials: Vec<CatalogMaterial>,
    pub tools: Vec<ToolFile>,
}

async fn handle_catalog(State(state): State<AppState>) -> Result<Json<Catalog>, ApiError> {
    let materials = state
        .db
        .names()
        .into_iter()
        .map(|name| CatalogMaterial {
            name: name.to_string(),
            sources: state.db.get(name).map(|m| m.sources()).unwrap_or_default(),
        })
        .collect();
    let mut tools = EXAMPLE_TOOLS
        .iter()
        .map(|t| ToolFile::from_json(t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ApiError::internal(e.to_string()))?;
    tools.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(Json(Catalog { materials, tools }))
}

async fn handle_health() -> Json<Value> {
    Json(serde_json::json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}
