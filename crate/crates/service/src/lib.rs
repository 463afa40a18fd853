//! HTTP front end for on-demand stitching against a shared, warm pool.
//!
//! Routes:
//!
//! * `POST /v1/stitch` with `{"tree": {...}}` or `{"set": ["g:a:v", ...]}`
//!   and optional `"options": {"includeAbstractTargets": bool}`
//! * `GET /v1/pool/{group}/{artifact}/{version}`
//! * `GET /v1/stats`
//! * `GET /v1/health`
//!
//! Errors are `application/problem+json`. Phase durations are reported in a
//! `Server-Timing` header so that response bodies stay reproducible.

use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use cgstitch_core::depset::{parse_lenient_coordinate, parse_tree};
use cgstitch_core::engine::{DependencyInput, Engine, EngineError, ErrorClass};
use cgstitch_core::model::MavenCoordinate;
use cgstitch_core::pool::PoolError;
use cgstitch_core::stitch::StitchOptions;
use serde_json::{json, Value};
use tokio::net::TcpListener;

#[derive(Debug, thiserror::Error)]
pub enum RequestError {
    #[error("{0}")]
    Malformed(String),
}

/// A problem+json error response.
#[derive(Debug)]
pub struct Problem {
    status: StatusCode,
    kind: &'static str,
    detail: String,
    coordinate: Option<MavenCoordinate>,
}

impl Problem {
    fn new(status: StatusCode, kind: &'static str, detail: impl Into<String>) -> Self {
        Problem {
            status,
            kind,
            detail: detail.into(),
            coordinate: None,
        }
    }

    fn bad_request(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed-request", detail)
    }
}

impl From<EngineError> for Problem {
    fn from(e: EngineError) -> Self {
        let detail = e.to_string();
        match e.class() {
            ErrorClass::NotFound(coordinate) => Problem {
                coordinate: Some(coordinate),
                ..Problem::new(StatusCode::NOT_FOUND, "artifact-not-found", detail)
            },
            ErrorClass::Input => Problem::new(StatusCode::UNPROCESSABLE_ENTITY, "unusable-artifact", detail),
            ErrorClass::Internal => match e {
                EngineError::Pool(PoolError::CorruptEntry { coordinate, .. }) => Problem {
                    coordinate: Some(coordinate),
                    ..Problem::new(StatusCode::INTERNAL_SERVER_ERROR, "corrupt-entry", detail)
                },
                _ => Problem::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", detail),
            },
        }
    }
}

impl IntoResponse for Problem {
    fn into_response(self) -> Response {
        let mut body = json!({
            "detail": self.detail,
            "status": self.status.as_u16(),
            "title": self.status.canonical_reason().unwrap_or("error"),
            "type": self.kind,
        });
        if let Some(c) = &self.coordinate {
            body["coordinate"] = Value::String(c.to_string());
        }
        (
            self.status,
            [(header::CONTENT_TYPE, "application/problem+json")],
            body.to_string(),
        )
            .into_response()
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

/// Parses a stitch request body into the pipeline input and options.
pub fn parse_stitch_request(body: &[u8]) -> Result<(DependencyInput, StitchOptions), RequestError> {
    let malformed = |m: String| RequestError::Malformed(m);
    let value: Value = serde_json::from_slice(body).map_err(|e| malformed(format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("request body must be a JSON object".into()))?;
    if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "tree" | "set" | "options")) {
        return Err(malformed(format!("unknown field `{k}`")));
    }
    let input = match (obj.get("tree"), obj.get("set")) {
        (Some(tree), None) => DependencyInput::Tree(
            parse_tree(&tree.to_string()).map_err(|e| malformed(e.to_string()))?,
        ),
        (None, Some(Value::Array(items))) => {
            let mut set = Vec::with_capacity(items.len());
            for item in items {
                let text = item
                    .as_str()
                    .ok_or_else(|| malformed("`set` entries must be strings".into()))?;
                set.push(parse_lenient_coordinate(text).map_err(|e| malformed(e.to_string()))?);
            }
            if set.is_empty() {
                return Err(malformed("`set` must not be empty".into()));
            }
            DependencyInput::Set(set)
        }
        (None, Some(_)) => return Err(malformed("`set` must be an array".into())),
        _ => return Err(malformed("exactly one of `tree` and `set` is required".into())),
    };
    let mut options = StitchOptions::default();
    if let Some(opts) = obj.get("options") {
        let opts = opts
            .as_object()
            .ok_or_else(|| malformed("`options` must be an object".into()))?;
        for (k, v) in opts {
            match (k.as_str(), v) {
                ("includeAbstractTargets", Value::Bool(b)) => options.include_abstract_targets = *b,
                _ => return Err(malformed(format!("unsupported option `{k}`"))),
            }
        }
    }
    Ok((input, options))
}

fn server_timing(stats: &cgstitch_core::stitch::PhaseStats) -> HeaderValue {
    let ms = |d: std::time::Duration| d.as_secs_f64() * 1000.0;
    HeaderValue::from_str(&format!(
        "pool;dur={:.3}, uch;dur={:.3}, stitch;dur={:.3}",
        ms(stats.pool),
        ms(stats.uch),
        ms(stats.stitch)
    ))
    .expect("ascii header")
}

async fn stitch_handler(State(engine): State<Arc<Engine>>, body: Bytes) -> Result<Response, Problem> {
    let (input, options) = parse_stitch_request(&body).map_err(|e| Problem::bad_request(e.to_string()))?;
    let run = tokio::task::spawn_blocking(move || engine.run(&input, &options))
        .await
        .map_err(|e| Problem::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    let mut headers = HeaderMap::new();
    headers.insert("server-timing", server_timing(run.phases()));
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    let body = run.cg.to_canonical_json(Some(run.counters_json()));
    Ok((StatusCode::OK, headers, body).into_response())
}

async fn pool_entry(
    State(engine): State<Arc<Engine>>,
    Path((group, artifact, version)): Path<(String, String, String)>,
) -> Result<Response, Problem> {
    let coordinate = MavenCoordinate::new(&group, &artifact, &version)
        .map_err(|e| Problem::bad_request(e.to_string()))?;
    let found = tokio::task::spawn_blocking({
        let coordinate = coordinate.clone();
        move || engine.pool().peek(&coordinate)
    })
    .await
    .map_err(|e| Problem::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
    .map_err(|e| Problem::from(EngineError::Pool(e)))?;
    match found {
        Some(pcg) => Ok(json_response(StatusCode::OK, pcg.to_canonical_json())),
        None => Err(Problem {
            coordinate: Some(coordinate.clone()),
            ..Problem::new(StatusCode::NOT_FOUND, "not-pooled", format!("{coordinate} is not in the pool"))
        }),
    }
}

async fn stats(State(engine): State<Arc<Engine>>) -> Response {
    json_response(StatusCode::OK, engine.pool().stats().to_json().to_string())
}

async fn health() -> Response {
    json_response(StatusCode::OK, json!({"status": "ok"}).to_string())
}

async fn not_found() -> Problem {
    Problem::new(StatusCode::NOT_FOUND, "no-such-route", "no such route")
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/v1/stitch", post(stitch_handler))
        .route("/v1/pool/{group}/{artifact}/{version}", get(pool_entry))
        .route("/v1/stats", get(stats))
        .route("/v1/health", get(health))
        .fallback(not_found)
        .with_state(engine)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    engine: Arc<Engine>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(shutdown)
        .await
}
