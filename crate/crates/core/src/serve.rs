//! HTTP inference endpoint over one immutable loaded bundle.
//!
//! `GET /healthz` answers `ok`. `POST /classify` takes
//! `{"transcript": "...", "audio_wav_base64": "..."}` (audio optional) and
//! answers `{"dialect", "code", "scores": {code: probability}}`.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::dsp::decode_wav_bytes;
use crate::error::Error;
use crate::models::{ModelBundle, Prediction};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyRequest {
    pub transcript: String,
    #[serde(default)]
    pub audio_wav_base64: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub dialect: String,
    pub code: String,
    pub scores: BTreeMap<String, f64>,
}

impl From<&Prediction> for ClassifyResponse {
    fn from(p: &Prediction) -> Self {
        Self {
            dialect: p.label.name().to_string(),
            code: p.label.code().to_string(),
            scores: crate::corpus::DialectLabel::all()
                .zip(&p.scores)
                .map(|(l, &s)| (l.code().to_string(), s))
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: message.into() })).into_response()
}

pub fn router(bundle: Arc<ModelBundle>) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/classify", post(classify))
        .with_state(bundle)
}

async fn classify(State(bundle): State<Arc<ModelBundle>>, body: Bytes) -> Response {
    let req: ClassifyRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed request: {e}")),
    };
    let audio = match &req.audio_wav_base64 {
        None => None,
        Some(b64) => {
            let bytes = match base64::engine::general_purpose::STANDARD.decode(b64) {
                Ok(b) => b,
                Err(e) => return error(StatusCode::BAD_REQUEST, format!("audio_wav_base64: {e}")),
            };
            match decode_wav_bytes(&bytes) {
                Ok(w) => Some(w),
                Err(e) => return error(StatusCode::BAD_REQUEST, format!("audio_wav_base64: {e}")),
            }
        }
    };
    let result = tokio::task::spawn_blocking(move || bundle.predict(&req.transcript, audio.as_ref())).await;
    match result {
        Ok(Ok(p)) => Json(ClassifyResponse::from(&p)).into_response(),
        Ok(Err(Error::AudioRequired)) => error(StatusCode::UNPROCESSABLE_ENTITY, Error::AudioRequired.to_string()),
        Ok(Err(e)) if e.is_input_error() => error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
        _ => error(StatusCode::INTERNAL_SERVER_ERROR, "internal error"),
    }
}

/// Serves until the listener fails or the future is dropped.
pub async fn serve(listener: tokio::net::TcpListener, bundle: Arc<ModelBundle>) -> std::io::Result<()> {
    axum::serve(listener, router(bundle)).await
}
