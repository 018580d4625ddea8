use std::convert::Infallible;

use axum::extract::{Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::broadcast::error::RecvError;

use cobot_core::bt::NodeStatus;
use cobot_core::knowledge::SymbolEntry;
use cobot_core::scenarios::Event;

use crate::error::ApiError;
use crate::{Handle, RunRequest};

pub fn router(handle: Handle) -> Router {
    Router::new()
        .route("/status", get(status))
        .route("/world", get(world))
        .route("/detect", post(detect))
        .route("/tree", get(get_tree).put(put_tree))
        .route("/tree/status", get(tree_status))
        .route("/tree/run", post(run))
        .route("/tree/stop", post(stop))
        .route("/teach", post(teach))
        .route("/symbols", get(symbols))
        .route("/registry", get(registry))
        .route("/query", post(query))
        .route("/events", get(events))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", "no such endpoint") })
        .with_state(handle)
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Body parsing with the error document instead of axum's plain-text rejection.
fn body<T: DeserializeOwned>(text: &str) -> Result<T, ApiError> {
    serde_json::from_str(text).map_err(|e| ApiError::bad_request(e.to_string()))
}

async fn status(State(h): State<Handle>) -> ApiResult<crate::StatusDoc> {
    Ok(Json(h.call(|e| e.status()).await))
}

async fn world(State(h): State<Handle>) -> ApiResult<cobot_core::sim::WorldState> {
    Ok(Json(h.call(|e| e.world()).await))
}

async fn detect(State(h): State<Handle>) -> ApiResult<cobot_core::sim::DetectionSnapshot> {
    h.call(|e| e.detect()).await.map(Json)
}

async fn get_tree(State(h): State<Handle>) -> Response {
    match h.call(|e| e.tree().map(cobot_core::bt::document::to_document)).await {
        Ok(doc) => ([("content-type", "application/json")], doc).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn put_tree(State(h): State<Handle>, text: String) -> Response {
    match h
        .call(move |e| e.put_tree(&text).map(cobot_core::bt::document::to_document))
        .await
    {
        Ok(doc) => ([("content-type", "application/json")], doc).into_response(),
        Err(e) => e.into_response(),
    }
}

#[derive(Serialize)]
struct BoardEntry {
    node_id: String,
    status: NodeStatus,
}

async fn tree_status(State(h): State<Handle>) -> ApiResult<Vec<BoardEntry>> {
    let board = h.call(|e| e.board()).await;
    Ok(Json(
        board
            .into_iter()
            .map(|(node_id, status)| BoardEntry { node_id, status })
            .collect(),
    ))
}

async fn run(State(h): State<Handle>, text: String) -> ApiResult<crate::StatusDoc> {
    let req: RunRequest = body(&text)?;
    h.call(move |e| e.run(req)).await.map(Json)
}

async fn stop(State(h): State<Handle>) -> ApiResult<crate::StatusDoc> {
    h.call(|e| e.stop()).await.map(Json)
}

async fn teach(State(h): State<Handle>, text: String) -> ApiResult<SymbolEntry> {
    let entry: SymbolEntry = body(&text)?;
    h.call(move |e| e.teach(entry)).await.map(Json)
}

async fn symbols(State(h): State<Handle>) -> ApiResult<crate::SymbolsDoc> {
    Ok(Json(h.call(|e| e.symbols()).await))
}

async fn registry(State(h): State<Handle>) -> ApiResult<crate::RegistryDoc> {
    Ok(Json(h.call(|e| e.registry()).await))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryRequest {
    predicate: String,
}

async fn query(State(h): State<Handle>, text: String) -> ApiResult<crate::QueryDoc> {
    let req: QueryRequest = body(&text)?;
    h.call(move |e| e.query(&req.predicate)).await.map(Json)
}

#[derive(Deserialize)]
struct EventsQuery {
    /// First sequence number wanted.
    since: Option<u64>,
    /// With `false` the stream ends after the backlog.
    follow: Option<bool>,
}

fn sse(event: &Event) -> SseEvent {
    SseEvent::default()
        .id(event.seq.to_string())
        .event(
            serde_json::to_value(event.kind)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
        )
        .data(serde_json::to_string(event).expect("events serialize"))
}

async fn events(
    State(h): State<Handle>,
    Query(q): Query<EventsQuery>,
    headers: HeaderMap,
) -> Sse<impl Stream<Item = Result<SseEvent, Infallible>>> {
    // a reconnecting browser sends the last id it saw
    let resume = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse::<u64>().ok())
        .map(|id| id + 1);
    let since = q.since.or(resume).unwrap_or(0);
    let (backlog, next, rx) = h.events().replay(since);
    let backlog = stream::iter(backlog.iter().map(sse).map(Ok).collect::<Vec<_>>());
    let live = stream::unfold(Some((rx, next.max(since))), |state| async move {
        let (mut rx, mut next) = state?;
        loop {
            match rx.recv().await {
                Ok(e) if e.seq < next => continue,
                Ok(e) => {
                    next = e.seq + 1;
                    return Some((Ok(sse(&e)), Some((rx, next))));
                }
                Err(RecvError::Lagged(missed)) => {
                    let gap = SseEvent::default()
                        .event("GAP")
                        .data(json!({ "missed": missed, "resume_from": next }).to_string());
                    return Some((Ok(gap), None));
                }
                Err(RecvError::Closed) => return None,
            }
        }
    });
    let follow = q.follow.unwrap_or(true);
    let stream = backlog.chain(stream::iter(follow.then_some(live)).flatten());
    Sse::new(stream.boxed()).keep_alive(KeepAlive::default())
}
