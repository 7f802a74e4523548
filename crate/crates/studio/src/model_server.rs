//! Serves any `ModelBackend` over the wire protocol.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use histoblend_core::backend::ModelBackend;
use histoblend_core::latent::{ConditioningSchedule, Seed};

use crate::wire::{ClassifyResponse, DescribeResponse, ErrorBody, GenerateRequest, ImageBody};

type Shared = Arc<dyn ModelBackend>;

fn bad_request(msg: impl ToString) -> Response {
    (StatusCode::BAD_REQUEST, Json(ErrorBody { error: msg.to_string() })).into_response()
}

async fn describe(State(b): State<Shared>) -> Json<DescribeResponse> {
    Json(DescribeResponse::from(&b.describe()))
}

async fn generate(State(b): State<Shared>, body: Result<Json<GenerateRequest>, JsonRejection>) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(e) => return bad_request(e.body_text()),
    };
    let result = tokio::task::spawn_blocking(move || {
        let schedule = ConditioningSchedule::from_layers(req.schedule)?;
        b.generate(Seed(req.seed), &schedule)
    })
    .await;
    match result {
        Ok(Ok(img)) => Json(ImageBody::from(&img.image)).into_response(),
        Ok(Err(e)) => bad_request(e),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, Json(ErrorBody { error: e.to_string() })).into_response(),
    }
}

async fn classify(State(b): State<Shared>, body: Result<Json<ImageBody>, JsonRejection>) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(e) => return bad_request(e.body_text()),
    };
    let result = tokio::task::spawn_blocking(move || {
        let image = req.decode().map_err(|e| e.to_string())?;
        b.classify(&image).map_err(|e| e.to_string())
    })
    .await;
    match result {
        Ok(Ok(p)) => Json(ClassifyResponse::from(&p)).into_response(),
        Ok(Err(e)) => bad_request(e),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, Json(ErrorBody { error: e.to_string() })).into_response(),
    }
}

pub fn router(backend: Shared) -> Router {
    Router::new()
        .route("/v1/describe", post(describe))
        .route("/v1/generate", post(generate))
        .route("/v1/classify", post(classify))
        .with_state(backend)
}
