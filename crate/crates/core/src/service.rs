//! HTTP adapter over the predictor.
//!
//! `POST /api/predict` takes `{"text": ..., "k": ..., "prefix": ...}` and
//! returns the ranked suggestions; `GET /api/health` reports model stats.
//! The model is shared read-only behind an `Arc`; handlers take no locks.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

use crate::ngram::LanguageModel;
use crate::persistence;
use crate::predictor::{self, BackoffConfig, PredictError, PredictionRequest, DEFAULT_K};

pub const MAX_TEXT_BYTES: usize = 4096;
pub const MAX_K: usize = 100;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictBody {
    pub text: String,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub prefix: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSuggestion {
    pub word: String,
    pub score: f64,
    pub matched_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub suggestions: Vec<WireSuggestion>,
    pub model_id: String,
    pub elapsed_micros: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orders: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocab_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub script_mode: Option<String>,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: message.into() })).into_response()
}

struct LoadedModel {
    model: LanguageModel,
    model_id: String,
    backoff: BackoffConfig,
}

/// Shared handler state. `None` means no model is loaded.
#[derive(Clone, Default)]
pub struct AppState {
    loaded: Option<Arc<LoadedModel>>,
}

impl AppState {
    pub fn new(model: LanguageModel) -> Self {
        let backoff = BackoffConfig::for_model(&model);
        Self::with_backoff(model, backoff)
    }

    pub fn with_backoff(model: LanguageModel, backoff: BackoffConfig) -> Self {
        let model_id = persistence::model_id(&model);
        AppState {
            loaded: Some(Arc::new(LoadedModel {
                model,
                model_id,
                backoff,
            })),
        }
    }

    pub fn unloaded() -> Self {
        AppState::default()
    }
}

/// Run one prediction exactly as the HTTP handler does, minus transport.
pub fn predict(
    model: &LanguageModel,
    model_id: &str,
    backoff: &BackoffConfig,
    body: &PredictBody,
) -> Result<PredictResponse, PredictError> {
    let started = Instant::now();
    let request = PredictionRequest {
        context_text: body.text.clone(),
        k: Some(body.k.unwrap_or(DEFAULT_K)),
        prefix: body.prefix.clone(),
    };
    let suggestions = predictor::suggest(model, &request, backoff)?
        .into_iter()
        .map(|s| WireSuggestion {
            word: s.word,
            score: s.score,
            matched_order: s.matched_order,
        })
        .collect();
    Ok(PredictResponse {
        suggestions,
        model_id: model_id.to_string(),
        elapsed_micros: started.elapsed().as_micros() as u64,
    })
}

async fn handle_predict(State(state): State<AppState>, body: Bytes) -> Response {
    let Some(loaded) = state.loaded.as_deref() else {
        return error(StatusCode::SERVICE_UNAVAILABLE, "no model loaded");
    };
    let body: PredictBody = match serde_json::from_slice(&body) {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed body: {e}")),
    };
    if body.text.len() > MAX_TEXT_BYTES {
        return error(StatusCode::BAD_REQUEST, format!("text exceeds {MAX_TEXT_BYTES} bytes"));
    }
    if matches!(body.k, Some(k) if k == 0 || k > MAX_K) {
        return error(StatusCode::BAD_REQUEST, format!("k must be between 1 and {MAX_K}"));
    }
    match predict(&loaded.model, &loaded.model_id, &loaded.backoff, &body) {
        Ok(resp) => Json(resp).into_response(),
        Err(PredictError::EmptyModel) => error(StatusCode::SERVICE_UNAVAILABLE, "model is empty"),
        Err(e) => error(StatusCode::BAD_REQUEST, e.to_string()),
    }
}

async fn handle_health(State(state): State<AppState>) -> Response {
    match state.loaded.as_deref() {
        Some(l) => Json(HealthResponse {
            status: "ok".into(),
            model_id: Some(l.model_id.clone()),
            orders: Some(l.model.max_order()),
            vocab_size: Some(l.model.vocab_size()),
            script_mode: Some(l.model.normalization().script_mode.to_string()),
        })
        .into_response(),
        None => (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(HealthResponse {
                status: "unavailable".into(),
                model_id: None,
                orders: None,
                vocab_size: None,
                script_mode: None,
            }),
        )
            .into_response(),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/predict", post(handle_predict))
        .route("/api/health", get(handle_health))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Bind and serve until ctrl-c.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
