//! The HTTP API.

use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use guideqa_core::pipeline::{Pipeline, PipelineError};
use guideqa_core::risk::{score, RiskError, RiskProfile, ScoringTable};
use serde::de::DeserializeOwned;
use serde_json::error::Category;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use tower_http::trace::TraceLayer;
use tracing::{error, info};

use crate::api::{AskRequest, AskResponse, ErrorBody, Health, RiskResponse, Sections};

#[derive(Clone)]
pub struct AppState {
    pub pipeline: Option<Arc<Pipeline>>,
    pub risk_table: Arc<ScoringTable>,
    pub cors_allowed_origins: Vec<String>,
}

impl AppState {
    pub fn new(pipeline: Option<Pipeline>, risk_table: ScoringTable) -> Self {
        Self {
            pipeline: pipeline.map(Arc::new),
            risk_table: Arc::new(risk_table),
            cors_allowed_origins: Vec::new(),
        }
    }
}

pub struct ApiError(StatusCode, ErrorBody);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

fn bad_request(body: ErrorBody) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, body)
}

fn kb_missing() -> ApiError {
    ApiError(
        StatusCode::SERVICE_UNAVAILABLE,
        ErrorBody::new("knowledge base not loaded"),
    )
}

/// Parse a JSON body, naming the offending field on failure.
fn parse_body<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let field = match inner.classify() {
            Category::Data if path != "." => path,
            _ => "body".to_string(),
        };
        bad_request(ErrorBody::new("malformed request body").field(field, inner.to_string()))
    })
}

fn cors(origins: &[String]) -> CorsLayer {
    let layer = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST, Method::OPTIONS])
        .allow_headers([header::CONTENT_TYPE]);
    if origins.is_empty() {
        layer.allow_origin(Any)
    } else {
        let list: Vec<HeaderValue> = origins.iter().filter_map(|o| o.parse().ok()).collect();
        layer.allow_origin(AllowOrigin::list(list))
    }
}

pub fn router(state: AppState) -> Router {
    let cors = cors(&state.cors_allowed_origins);
    Router::new()
        .route("/ask", post(ask))
        .route("/risk", post(risk))
        .route("/sections", get(sections))
        .route("/health", get(health))
        .fallback(not_found)
        .layer(TraceLayer::new_for_http())
        .layer(cors)
        .with_state(state)
}

async fn not_found() -> ApiError {
    ApiError(StatusCode::NOT_FOUND, ErrorBody::new("not found"))
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    let unit_count = state.pipeline.as_ref().map_or(0, |p| p.kb().units.len());
    Json(Health {
        status: if state.pipeline.is_some() { "ok" } else { "degraded" }.into(),
        kb_loaded: state.pipeline.is_some(),
        unit_count,
    })
}

async fn sections(State(state): State<AppState>) -> Result<Json<Sections>, ApiError> {
    let pipeline = state.pipeline.as_ref().ok_or_else(kb_missing)?;
    Ok(Json(Sections::of(pipeline.kb())))
}

async fn ask(State(state): State<AppState>, body: Bytes) -> Result<Json<AskResponse>, ApiError> {
    let req: AskRequest = parse_body(&body)?;
    req.check()
        .map_err(|m| bad_request(ErrorBody::new("invalid question").field("question", m)))?;
    let pipeline = Arc::clone(state.pipeline.as_ref().ok_or_else(kb_missing)?);

    let started = Instant::now();
    let question = req.question;
    let answer = tokio::task::spawn_blocking(move || pipeline.ask(&question))
        .await
        .map_err(|e| {
            error!(error = %e, "pipeline task failed");
            ApiError(StatusCode::INTERNAL_SERVER_ERROR, ErrorBody::new("internal error"))
        })?;
    let answer = answer.map_err(|e| match e {
        PipelineError::GatewayUnavailable => {
            ApiError(StatusCode::SERVICE_UNAVAILABLE, ErrorBody::new(e.to_string()))
        }
        other => ApiError(StatusCode::INTERNAL_SERVER_ERROR, ErrorBody::new(other.to_string())),
    })?;
    let timing_ms = started.elapsed().as_millis() as u64;
    info!(
        section = %answer.route.section_id,
        answered = answer.is_answered(),
        timing_ms,
        "ask"
    );
    Ok(Json(AskResponse::from_answer(&answer, timing_ms)))
}

async fn risk(State(state): State<AppState>, body: Bytes) -> Result<Json<RiskResponse>, ApiError> {
    let profile: RiskProfile = parse_body(&body)?;
    match score(&profile, &state.risk_table) {
        Ok(result) => Ok(Json(result.into())),
        Err(RiskError::OutOfRange { field, message }) => Err(bad_request(
            ErrorBody::new("risk profile out of range").field(field, message),
        )),
        Err(e @ RiskError::InvalidTable(_)) => Err(ApiError(
            StatusCode::INTERNAL_SERVER_ERROR,
            ErrorBody::new(e.to_string()),
        )),
    }
}

/// Serve until Ctrl-C or SIGTERM, then drain in-flight requests.
pub async fn serve(state: AppState, addr: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown_signal())
        .await?;
    info!("shut down");
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}
