//! HTTP query service over a frozen taxonomy snapshot.
//!
//! Three read-only endpoints, all returning the same JSON envelope:
//!
//! * `GET /men2ent?mention=M` — entities reachable from a mention
//! * `GET /getConcept?entity=E` — hypernym list of an entity
//! * `GET /getEntity?concept=C&offset=o&limit=l` — hyponym list, paginated
//!
//! Responses are pure functions of (snapshot, request): identical requests
//! against the same snapshot produce byte-identical bodies. Missing or
//! malformed parameters give a 400 with an error envelope; unknown keys give
//! 200 with empty results.

use std::collections::HashMap;
use std::io;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Json, Response};
use axum::routing::get;
use axum::Router;
use serde::{Deserialize, Serialize};

use crate::store::TaxonomyGraph;

pub const DEFAULT_LIMIT: usize = 100;
pub const MAX_LIMIT: usize = 1000;

/// Response envelope shared by every endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiResponse {
    pub status: String,
    pub results: Vec<String>,
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl ApiResponse {
    fn ok(results: Vec<String>, total: usize, offset: usize, limit: usize) -> Self {
        ApiResponse {
            status: "ok".into(),
            results,
            total,
            offset,
            limit,
            message: None,
        }
    }

    fn error(message: impl Into<String>) -> Self {
        ApiResponse {
            status: "error".into(),
            results: Vec::new(),
            total: 0,
            offset: 0,
            limit: 0,
            message: Some(message.into()),
        }
    }
}

fn bad_request(message: impl Into<String>) -> Response {
    (StatusCode::BAD_REQUEST, Json(ApiResponse::error(message))).into_response()
}

/// Parse offset/limit, slice the full list, and wrap it in the envelope.
/// The limit is clamped to [`MAX_LIMIT`].
fn paginate(full: Vec<String>, params: &HashMap<String, String>) -> Result<ApiResponse, Response> {
    let parse = |key: &str, default: usize| -> Result<usize, Response> {
        match params.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse::<usize>()
                .map_err(|_| bad_request(format!("parameter {key:?} must be a non-negative integer"))),
        }
    };
    let offset = parse("offset", 0)?;
    let limit = parse("limit", DEFAULT_LIMIT)?.min(MAX_LIMIT);
    let total = full.len();
    let results: Vec<String> = full.into_iter().skip(offset).take(limit).collect();
    Ok(ApiResponse::ok(results, total, offset, limit))
}

fn require<'a>(
    params: &'a HashMap<String, String>,
    key: &str,
) -> Result<&'a str, Response> {
    params
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| bad_request(format!("missing required parameter {key:?}")))
}

async fn men2ent(
    State(graph): State<Arc<TaxonomyGraph>>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let result = require(&params, "mention")
        .map(|mention| graph.men2ent(mention))
        .and_then(|full| paginate(full, &params));
    match result {
        Ok(body) => Json(body).into_response(),
        Err(resp) => resp,
    }
}

async fn get_concept(
    State(graph): State<Arc<TaxonomyGraph>>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let result = require(&params, "entity")
        .map(|entity| graph.get_concepts(entity))
        .and_then(|full| paginate(full, &params));
    match result {
        Ok(body) => Json(body).into_response(),
        Err(resp) => resp,
    }
}

async fn get_entity(
    State(graph): State<Arc<TaxonomyGraph>>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let result = require(&params, "concept")
        .map(|concept| graph.get_entities(concept))
        .and_then(|full| paginate(full, &params));
    match result {
        Ok(body) => Json(body).into_response(),
        Err(resp) => resp,
    }
}

/// Build the router over a frozen graph.
pub fn router(graph: Arc<TaxonomyGraph>) -> Router {
    Router::new()
        .route("/men2ent", get(men2ent))
        .route("/getConcept", get(get_concept))
        .route("/getEntity", get(get_entity))
        .with_state(graph)
}

/// Serve on an already-bound listener until the socket closes.
pub async fn serve_listener(
    graph: Arc<TaxonomyGraph>,
    listener: tokio::net::TcpListener,
) -> io::Result<()> {
    axum::serve(listener, router(graph)).await
}

/// Serve until ctrl-c; in-flight requests drain before shutdown.
pub async fn serve(graph: Arc<TaxonomyGraph>, addr: SocketAddr) -> io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("serving taxonomy on {}", listener.local_addr()?);
    axum::serve(listener, router(graph))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
