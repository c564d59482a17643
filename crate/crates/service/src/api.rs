use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use polarlex_core::extraction::parse_candidates;
use polarlex_core::lexicon::{
    render_annotation_log, render_lexicon, Annotator, Judgment, KappaOptions, PolarityLabel,
    Weighting,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use crate::store::{ItemView, Store, StoreError, TaskItem};

pub type SharedStore = Arc<RwLock<Store>>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match e {
            StoreError::Invalid(_) => StatusCode::BAD_REQUEST,
            StoreError::UnknownTask(_) | StoreError::UnknownItem(_) => StatusCode::NOT_FOUND,
            StoreError::UnknownAnnotator(_) | StoreError::Forbidden(_) => StatusCode::FORBIDDEN,
            StoreError::Conflict(_) => StatusCode::CONFLICT,
            StoreError::CorruptLog { .. } | StoreError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            log::error!("{e}");
        }
        Self {
            status,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn read(store: &SharedStore) -> std::sync::RwLockReadGuard<'_, Store> {
    store.read().unwrap_or_else(|p| p.into_inner())
}

fn write(store: &SharedStore) -> std::sync::RwLockWriteGuard<'_, Store> {
    store.write().unwrap_or_else(|p| p.into_inner())
}

/// Routes of the annotation API. With `ui_dir`, unmatched paths serve static files from it.
pub fn router(store: SharedStore, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/tasks", post(create_task).get(list_tasks))
        .route("/tasks/:task", get(task_status))
        .route("/tasks/:task/next", get(next_item))
        .route("/tasks/:task/items/:item/label", post(submit_label))
        .route("/tasks/:task/items/:item/resolve", post(resolve_item))
        .route("/tasks/:task/kappa", get(kappa))
        .route("/tasks/:task/export", get(export))
        .route("/tasks/:task/log", get(annotation_log))
        .route("/tasks/:task/disagreements", get(disagreements))
        .with_state(store);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateTask {
    /// Candidate TSV (`ngram<TAB>count`); item ids are the n-gram keys.
    #[serde(default)]
    candidates: Option<String>,
    #[serde(default)]
    items: Option<Vec<TaskItem>>,
    annotators: Vec<Annotator>,
}

async fn create_task(State(store): State<SharedStore>, body: Bytes) -> ApiResult<Response> {
    let req: CreateTask = parse_body(&body)?;
    let items = match (req.candidates, req.items) {
        (Some(tsv), None) => parse_candidates(&tsv)
            .map_err(|e| ApiError::bad_request(format!("candidates: {e}")))?
            .into_iter()
            .map(|(ngram, count)| TaskItem {
                item_id: ngram.key(),
                ngram: ngram.key(),
                gloss: None,
                count,
            })
            .collect(),
        (None, Some(items)) => items,
        _ => {
            return Err(ApiError::bad_request(
                "provide exactly one of `candidates` or `items`",
            ))
        }
    };
    let n = items.len();
    let task_id = write(&store).create_task(items, req.annotators)?;
    Ok((
        StatusCode::CREATED,
        Json(json!({ "task_id": task_id, "items": n })),
    )
        .into_response())
}

async fn list_tasks(State(store): State<SharedStore>) -> Json<Value> {
    let ids: Vec<String> = read(&store).task_ids().map(str::to_owned).collect();
    Json(json!({ "tasks": ids }))
}

async fn task_status(
    State(store): State<SharedStore>,
    Path(task): Path<String>,
) -> ApiResult<Json<Value>> {
    let store = read(&store);
    let t = store.task(&task)?;
    Ok(Json(json!({
        "task_id": t.task_id,
        "annotators": t.annotators,
        "senior": t.senior().id,
        "progress": t.progress(),
        "items": t.items(),
    })))
}

fn annotator_param(query: &HashMap<String, String>) -> ApiResult<&str> {
    query
        .get("annotator")
        .map(String::as_str)
        .ok_or_else(|| ApiError::bad_request("missing `annotator` query parameter"))
}

async fn next_item(
    State(store): State<SharedStore>,
    Path(task): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let annotator = annotator_param(&query)?;
    let store = read(&store);
    let t = store.task(&task)?;
    Ok(match t.next_for(annotator)? {
        Some(view) => Json(json!({
            "item": view,
            "remaining": t.remaining_for(annotator),
            "progress": t.progress(),
        }))
        .into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

#[derive(Deserialize)]
struct LabelRequest {
    annotator: String,
    judgment: String,
}

async fn submit_label(
    State(store): State<SharedStore>,
    Path((task, item)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Json<ItemView>> {
    let req: LabelRequest = parse_body(&body)?;
    let judgment: Judgment = req
        .judgment
        .parse()
        .map_err(|_| ApiError::bad_request(format!("invalid judgment `{}`", req.judgment)))?;
    let view = write(&store).submit_label(&task, &item, &req.annotator, judgment)?;
    Ok(Json(view))
}

#[derive(Deserialize)]
struct ResolveRequest {
    annotator: String,
    label: String,
}

async fn resolve_item(
    State(store): State<SharedStore>,
    Path((task, item)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Json<ItemView>> {
    let req: ResolveRequest = parse_body(&body)?;
    let label: PolarityLabel = req
        .label
        .parse()
        .map_err(|_| ApiError::bad_request(format!("invalid label `{}`", req.label)))?;
    let view = write(&store).resolve(&task, &item, &req.annotator, label)?;
    Ok(Json(view))
}

fn kappa_options(query: &HashMap<String, String>) -> ApiResult<KappaOptions> {
    let mut options = KappaOptions::default();
    if let Some(w) = query.get("weighting").filter(|w| !w.is_empty()) {
        options.weighting = w
            .parse::<Weighting>()
            .map_err(|_| ApiError::bad_request(format!("invalid weighting `{w}`")))?;
    }
    if let Some(b) = query.get("include_borderline").filter(|b| !b.is_empty()) {
        options.include_borderline = match b.as_str() {
            "true" | "1" => true,
            "false" | "0" => false,
            _ => {
                return Err(ApiError::bad_request(format!(
                    "invalid include_borderline `{b}`"
                )))
            }
        };
    }
    Ok(options)
}

async fn kappa(
    State(store): State<SharedStore>,
    Path(task): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult<Json<Value>> {
    let options = kappa_options(&query)?;
    let store = read(&store);
    let t = store.task(&task)?;
    let report = t.kappa(&options)?;
    let mut body = serde_json::to_value(&report).expect("reports serialize");
    body["progress"] = json!(t.progress());
    Ok(Json(body))
}

async fn export(State(store): State<SharedStore>, Path(task): Path<String>) -> ApiResult<Response> {
    let text = render_lexicon(&read(&store).task(&task)?.export());
    Ok((
        [(
            header::CONTENT_TYPE,
            "text/tab-separated-values; charset=utf-8",
        )],
        text,
    )
        .into_response())
}

async fn annotation_log(
    State(store): State<SharedStore>,
    Path(task): Path<String>,
) -> ApiResult<Response> {
    let text = render_annotation_log(read(&store).task(&task)?.history());
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

async fn disagreements(
    State(store): State<SharedStore>,
    Path(task): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult<Json<Value>> {
    let annotator = annotator_param(&query)?;
    let store = read(&store);
    let t = store.task(&task)?;
    t.check_annotator(annotator)?;
    let senior = &t.senior().id;
    if annotator != senior {
        return Err(StoreError::Forbidden(format!(
            "only the senior annotator `{senior}` reviews disagreements"
        ))
        .into());
    }
    let items: Vec<Value> = t
        .disagreements()
        .into_iter()
        .map(|view| {
            let suggested = match view.judgments.get(senior) {
                Some(Judgment::Label(l)) => Some(*l),
                _ => None,
            };
            json!({ "item": view, "suggested": suggested })
        })
        .collect();
    Ok(Json(json!({ "items": items })))
}
