//! HTTP API over one encoded model. Every request runs against immutable
//! shared state, so responses depend only on the request body.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bskin_core::io::encode_points_f32;
use bskin_core::pipeline::SkinOptions;
use bskin_core::sphere_mesh::Pose;
use bskin_core::Error;
use serde::Deserialize;

use crate::{Method, Model};

static DIAGNOSTIC: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Deserialize)]
pub struct LodQuery {
    pub lod: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct CountQuery {
    pub count: Option<usize>,
}

/// Body of `POST /api/pose`: either a bare pose or a pose with options.
#[derive(Debug, Deserialize)]
pub struct PoseRequest {
    #[serde(default = "one")]
    pub version: u32,
    pub pose: Pose,
    #[serde(default)]
    pub options: SkinOptions,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub lod: Option<usize>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Deserialize)]
pub struct BaselinesRequest {
    #[serde(default)]
    pub pose: Option<Pose>,
    #[serde(default)]
    pub count: Option<usize>,
}

const DEFAULT_BASELINES: usize = 16;

fn error_response(e: &Error) -> Response {
    let (status, id) = match e {
        Error::InvalidJointRef(_) | Error::InvalidBoneRef(_) => (StatusCode::CONFLICT, None),
        Error::InvalidPose(_) | Error::Parse { .. } | Error::OutOfRange { .. } => (StatusCode::BAD_REQUEST, None),
        _ => {
            let id = DIAGNOSTIC.fetch_add(1, Ordering::Relaxed);
            log::error!("diagnostic {id}: {e}");
            (StatusCode::INTERNAL_SERVER_ERROR, Some(id))
        }
    };
    let body = match id {
        Some(id) => serde_json::json!({ "error": e.to_string(), "diagnostic_id": id }),
        None => serde_json::json!({ "error": e.to_string() }),
    };
    (status, Json(body)).into_response()
}

fn binary(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response()
}

fn parse_pose_request(body: &[u8], lod: Option<usize>) -> Result<PoseRequest, Error> {
    let value: serde_json::Value = serde_json::from_slice(body)?;
    let mut req = if value.get("pose").is_some() {
        serde_json::from_value::<PoseRequest>(value)?
    } else {
        PoseRequest {
            version: 1,
            pose: serde_json::from_value(value)?,
            options: SkinOptions::default(),
            method: Method::Baseline,
            lod: None,
        }
    };
    if req.version != 1 || req.pose.version != 1 {
        return Err(Error::InvalidPose(format!("unsupported version {}", req.version.max(req.pose.version))));
    }
    req.lod = req.lod.or(lod);
    Ok(req)
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn skeleton(State(model): State<Arc<Model>>) -> Response {
    Json(model.rest.to_file()).into_response()
}

async fn points(State(model): State<Arc<Model>>, Query(q): Query<LodQuery>) -> Response {
    binary(encode_points_f32(&model.points, q.lod))
}

async fn pose(State(model): State<Arc<Model>>, Query(q): Query<LodQuery>, body: Bytes) -> Response {
    let req = match parse_pose_request(&body, q.lod) {
        Ok(r) => r,
        Err(e) => return error_response(&e),
    };
    let job = tokio::task::spawn_blocking(move || {
        let (pts, _) = model.deform(&req.pose, req.method, &req.options)?;
        Ok::<_, Error>(encode_points_f32(&pts, req.lod))
    });
    match job.await {
        Ok(Ok(bytes)) => binary(bytes),
        Ok(Err(e)) => error_response(&e),
        Err(e) => error_response(&Error::Io(format!("skinning job failed: {e}"))),
    }
}

async fn baselines_get(State(model): State<Arc<Model>>, Query(q): Query<CountQuery>) -> Response {
    baselines_for(model, None, q.count).await
}

async fn baselines_post(State(model): State<Arc<Model>>, body: Bytes) -> Response {
    match serde_json::from_slice::<BaselinesRequest>(&body) {
        Ok(r) => baselines_for(model, r.pose, r.count).await,
        Err(e) => error_response(&e.into()),
    }
}

async fn baselines_for(model: Arc<Model>, pose: Option<Pose>, count: Option<usize>) -> Response {
    let count = count.unwrap_or(DEFAULT_BASELINES);
    let job = tokio::task::spawn_blocking(move || crate::cli::baselines_json(&model.rest, pose.as_ref(), count));
    match job.await {
        Ok(Ok(json)) => ([(header::CONTENT_TYPE, "application/json")], json).into_response(),
        Ok(Err(e)) => error_response(&e),
        Err(e) => error_response(&Error::Io(format!("baseline job failed: {e}"))),
    }
}

pub fn router(model: Arc<Model>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/skeleton", get(skeleton))
        .route("/api/points", get(points))
        .route("/api/pose", post(pose))
        .route("/api/baselines", get(baselines_get).post(baselines_post))
        .with_state(model)
}

pub async fn serve(host: &str, port: u16, model: Model) -> Result<(), Error> {
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    log::warn!("serving {} points on http://{}", model.points.len(), listener.local_addr()?);
    axum::serve(listener, router(Arc::new(model))).await?;
    Ok(())
}
