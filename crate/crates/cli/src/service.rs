//! HTTP service behind the annotation interface.

use std::collections::{BTreeMap, HashMap};
use std::future::Future;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use srcsent_core::corpus::{gold_labels, AnnotationLine, PairLine};
use srcsent_core::pipeline::{AnnotationStore, StoreError};
use srcsent_core::score::load_scores;
use srcsent_core::{AnnotationRecord, DocumentSummaryPair, Reconstructability, ScoreVector};

use crate::commands::{agreement_report, split_name};

pub const ANNOTATION_SCHEMA: &str = include_str!("../schema/annotation_record.schema.json");

pub struct AppState {
    pairs: Vec<DocumentSummaryPair>,
    index: HashMap<String, usize>,
    store: AnnotationStore,
    scores: BTreeMap<String, HashMap<String, ScoreVector>>,
}

impl AppState {
    pub fn new(
        pairs: Vec<DocumentSummaryPair>,
        store: AnnotationStore,
        scores: BTreeMap<String, Vec<ScoreVector>>,
    ) -> Arc<Self> {
        let index = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (p.pair_id.clone(), i))
            .collect();
        let scores = scores
            .into_iter()
            .map(|(m, vs)| (m, vs.into_iter().map(|v| (v.pair_id.clone(), v)).collect()))
            .collect();
        Arc::new(Self {
            pairs,
            index,
            store,
            scores,
        })
    }

    fn pair(&self, id: &str) -> Result<&DocumentSummaryPair, ApiError> {
        self.index
            .get(id)
            .map(|&i| &self.pairs[i])
            .ok_or_else(|| ApiError::not_found(format!("no pair `{id}`")))
    }
}

/// Reads every `<method>.scores.jsonl` in `dir`.
pub fn load_score_dir(dir: &Path) -> Result<BTreeMap<String, Vec<ScoreVector>>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        let Some(method) = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_suffix(".scores.jsonl"))
        else {
            continue;
        };
        let vectors = load_scores(&path).with_context(|| format!("loading {}", path.display()))?;
        out.insert(method.to_string(), vectors);
    }
    Ok(out)
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": message.into() }),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/pairs", get(list_pairs))
        .route("/pairs/:id", get(get_pair))
        .route("/pairs/:id/annotations", get(pair_annotations).post(submit))
        .route("/pairs/:id/scores", get(pair_scores))
        .route("/pairs/:id/gold", get(pair_gold))
        .route("/annotations", get(all_annotations))
        .route("/agreement", get(agreement))
        .route("/schema/annotation", get(schema))
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "pairs": state.pairs.len(),
        "annotations": state.store.len(),
        "methods": state.scores.keys().collect::<Vec<_>>(),
    }))
}

#[derive(Deserialize)]
struct ListQuery {
    annotator: Option<String>,
}

async fn list_pairs(State(state): State<Arc<AppState>>, Query(q): Query<ListQuery>) -> Json<Value> {
    let items: Vec<Value> = state
        .pairs
        .iter()
        .filter(|p| match &q.annotator {
            Some(a) => !state.store.has_submitted(&p.pair_id, a),
            None => true,
        })
        .map(|p| {
            json!({
                "pair_id": p.pair_id,
                "split": split_name(p),
                "n_sentences": p.len(),
                "annotations": state.store.for_pair(&p.pair_id).len(),
            })
        })
        .collect();
    Json(Value::Array(items))
}

async fn get_pair(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let pair = state.pair(&id)?;
    Ok(Json(PairLine::from(pair)).into_response())
}

fn lines(records: &[AnnotationRecord]) -> Vec<AnnotationLine> {
    records.iter().map(AnnotationLine::from).collect()
}

async fn pair_annotations(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult {
    state.pair(&id)?;
    Ok(Json(lines(&state.store.for_pair(&id))).into_response())
}

async fn all_annotations(State(state): State<Arc<AppState>>) -> Json<Vec<AnnotationLine>> {
    Json(lines(&state.store.records()))
}

fn bearer(headers: &HeaderMap) -> Option<String> {
    let value = headers.get(header::AUTHORIZATION)?.to_str().ok()?;
    let token = value.strip_prefix("Bearer ")?.trim();
    (!token.is_empty()).then(|| token.to_string())
}

/// Checks a submission body against a pair; every problem is reported by field.
fn parse_submission(
    body: &Value,
    n_sentences: usize,
) -> Result<(Vec<bool>, Reconstructability), BTreeMap<String, String>> {
    let mut errors = BTreeMap::new();
    let mut labels = Vec::new();
    match body.get("sentence_labels") {
        None | Some(Value::Null) => {
            errors.insert("sentence_labels".into(), "required".into());
        }
        Some(Value::Array(items)) => {
            if items.len() != n_sentences {
                errors.insert(
                    "sentence_labels".into(),
                    format!("expected {n_sentences} labels, got {}", items.len()),
                );
            }
            for (i, item) in items.iter().enumerate() {
                match item.as_u64() {
                    Some(0) => labels.push(false),
                    Some(1) => labels.push(true),
                    _ if item.is_null() => {
                        errors.insert(format!("sentence_labels[{i}]"), "unlabeled".into());
                    }
                    _ => {
                        errors.insert(
                            format!("sentence_labels[{i}]"),
                            format!("{item} is not 0 or 1"),
                        );
                    }
                }
            }
        }
        Some(other) => {
            errors.insert(
                "sentence_labels".into(),
                format!("expected an array, got {other}"),
            );
        }
    }
    let verdict = match body.get("reconstructability") {
        None | Some(Value::Null) => {
            errors.insert("reconstructability".into(), "required".into());
            None
        }
        Some(v) => match serde_json::from_value::<Reconstructability>(v.clone()) {
            Ok(r) => Some(r),
            Err(_) => {
                errors.insert(
                    "reconstructability".into(),
                    format!("{v} is not yes, partly or no"),
                );
                None
            }
        },
    };
    if let Some(obj) = body.as_object() {
        for key in obj.keys() {
            if key != "sentence_labels" && key != "reconstructability" {
                errors.insert(key.clone(), "unknown field".into());
            }
        }
    } else {
        errors.insert("body".into(), "expected a JSON object".into());
    }
    match verdict {
        Some(v) if errors.is_empty() => Ok((labels, v)),
        _ => Err(errors),
    }
}

async fn submit(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
    body: String,
) -> ApiResult {
    let annotator = bearer(&headers)
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "missing bearer annotator id"))?;
    let n = state.pair(&id)?.len();
    let body: Value = serde_json::from_str(&body).map_err(|e| ApiError {
        status: StatusCode::UNPROCESSABLE_ENTITY,
        body: json!({ "error": "invalid JSON", "fields": { "body": e.to_string() } }),
    })?;
    let (sentence_labels, reconstructability) =
        parse_submission(&body, n).map_err(|fields| ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            body: json!({ "error": "incomplete or invalid annotation", "fields": fields }),
        })?;
    let record = AnnotationRecord {
        pair_id: id,
        annotator_id: annotator,
        sentence_labels,
        reconstructability,
    };
    let line = AnnotationLine::from(&record);
    let store = Arc::clone(&state);
    let result = tokio::task::spawn_blocking(move || store.store.append(record))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    match result {
        Ok(()) => Ok((StatusCode::CREATED, Json(line)).into_response()),
        Err(e @ StoreError::Duplicate { .. }) => {
            Err(ApiError::new(StatusCode::CONFLICT, e.to_string()))
        }
        Err(e) => Err(ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            e.to_string(),
        )),
    }
}

#[derive(Deserialize)]
struct ScoreQuery {
    method: Option<String>,
}

fn score_json(v: &ScoreVector) -> Value {
    json!({
        "method": v.method,
        "scores": v.scores,
        "ranking": v.ranking(),
        "metadata": v.metadata,
    })
}

async fn pair_scores(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<ScoreQuery>,
) -> ApiResult {
    state.pair(&id)?;
    match q.method {
        Some(m) => {
            let by_pair = state.scores.get(&m).ok_or_else(|| ApiError {
                status: StatusCode::NOT_FOUND,
                body: json!({
                    "error": format!("no scores for method `{m}`"),
                    "available": state.scores.keys().collect::<Vec<_>>(),
                }),
            })?;
            let v = by_pair.get(&id).ok_or_else(|| {
                ApiError::not_found(format!("method `{m}` has no scores for `{id}`"))
            })?;
            Ok(Json(score_json(v)).into_response())
        }
        None => {
            let all: BTreeMap<&String, Value> = state
                .scores
                .iter()
                .filter_map(|(m, by_pair)| by_pair.get(&id).map(|v| (m, score_json(v))))
                .collect();
            Ok(Json(all).into_response())
        }
    }
}

async fn pair_gold(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let pair = state.pair(&id)?.clone();
    let records = state.store.for_pair(&id);
    if records.is_empty() {
        return Err(ApiError::not_found(format!(
            "pair `{id}` has no annotations"
        )));
    }
    let gold = gold_labels(&[pair], &records)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let g = &gold[0];
    Ok(Json(json!({
        "pair_id": g.pair_id,
        "votes": g.votes,
        "n_annotators": g.n_annotators,
        "sources": g.source_indices(),
    }))
    .into_response())
}

async fn agreement(State(state): State<Arc<AppState>>) -> Json<Value> {
    let report = agreement_report("all", &state.store.records());
    Json(serde_json::to_value(report).expect("report serializes"))
}

async fn schema() -> impl IntoResponse {
    (
        [(header::CONTENT_TYPE, "application/schema+json")],
        ANNOTATION_SCHEMA,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn submission_errors_are_per_field() {
        let body = json!({ "sentence_labels": [1, null, 2], "extra": true });
        let errors = parse_submission(&body, 3).unwrap_err();
        let keys: Vec<&str> = errors.keys().map(String::as_str).collect();
        assert_eq!(
            keys,
            [
                "extra",
                "reconstructability",
                "sentence_labels[1]",
                "sentence_labels[2]"
            ]
        );
    }

    #[test]
    fn length_mismatch_reported() {
        let body = json!({ "sentence_labels": [1, 0], "reconstructability": "partly" });
        assert!(parse_submission(&body, 3)
            .unwrap_err()
            .contains_key("sentence_labels"));
        let (labels, v) = parse_submission(&body, 2).unwrap();
        assert_eq!((labels, v), (vec![true, false], Reconstructability::Partly));
    }

    #[test]
    fn bearer_parsing() {
        let mut h = HeaderMap::new();
        assert_eq!(bearer(&h), None);
        h.insert(header::AUTHORIZATION, "Bearer  ann-3 ".parse().unwrap());
        assert_eq!(bearer(&h).as_deref(), Some("ann-3"));
        h.insert(header::AUTHORIZATION, "Basic abc".parse().unwrap());
        assert_eq!(bearer(&h), None);
    }
}
