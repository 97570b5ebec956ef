//! HTTP API. Every error body is `{"error": kind, "message": text}`.

use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use goldilocks_core::cold_start::{ColdStartError, DrawOutcome};
use goldilocks_core::model::{AnnotatorId, Item, ItemId, ScalePos, SemanticAnchor, SessionId, Timestamp};
use goldilocks_core::protocol::SessionError;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{AnchorsFile, Dataset, IngestError};
use crate::export::ExportError;
use crate::service::{Service, ServiceError, SessionRequest, StepRequest};
use crate::state::{ColdStartOp, Outcome, StateError};
use crate::store::StoreError;

pub type Clock = fn() -> Timestamp;

#[derive(Clone)]
pub struct AppState {
    service: Arc<Mutex<Service>>,
    clock: Clock,
}

impl AppState {
    pub fn new(service: Service) -> Self {
        AppState { service: Arc::new(Mutex::new(service)), clock: Timestamp::now }
    }

    pub fn with_clock(service: Service, clock: Clock) -> Self {
        AppState { service: Arc::new(Mutex::new(service)), clock }
    }

    fn lock(&self) -> MutexGuard<'_, Service> {
        // a panic mid-request cannot leave state half-applied: appends are prepare-then-commit
        self.service.lock().unwrap_or_else(|p| p.into_inner())
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/datasets", post(create_dataset))
        .route("/datasets/{id}", get(dataset_summary))
        .route("/datasets/{id}/sessions", post(create_session))
        .route("/datasets/{id}/export", get(export))
        .route("/datasets/{id}/analyze", post(analyze))
        .route("/datasets/{id}/cold-start", get(draft).post(open_draft))
        .route("/datasets/{id}/cold-start/draw", post(draw))
        .route("/datasets/{id}/cold-start/drop", post(drop_candidate))
        .route("/datasets/{id}/cold-start/place", post(place))
        .route("/datasets/{id}/cold-start/finalize", post(finalize))
        .route("/datasets/{id}/cold-start/reintroduce", post(reintroduce))
        .route("/sessions/{id}/task", get(task))
        .route("/sessions/{id}/steps", post(submit))
        .route("/sessions/{id}/scrub", get(scrub))
        .route("/sessions/{id}/quality", get(quality))
        .with_state(state)
}

pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl ToString) -> Self {
        ApiError { status, kind, message: message.to_string() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.kind, "message": self.message }))).into_response()
    }
}

fn session_status(e: &SessionError) -> (StatusCode, &'static str) {
    use StatusCode as S;
    match e {
        SessionError::Config(_) => (S::BAD_REQUEST, "config"),
        SessionError::WrongPhase(_) => (S::CONFLICT, "wrong_phase"),
        SessionError::StepMismatch => (S::CONFLICT, "step_mismatch"),
        SessionError::Order { .. } => (S::UNPROCESSABLE_ENTITY, "order"),
        SessionError::NoInteraction => (S::UNPROCESSABLE_ENTITY, "no_interaction"),
        SessionError::Incomplete => (S::UNPROCESSABLE_ENTITY, "incomplete"),
        SessionError::Done => (S::CONFLICT, "done"),
        SessionError::Range(_) => (S::UNPROCESSABLE_ENTITY, "range"),
        SessionError::JudgmentCoverage => (S::UNPROCESSABLE_ENTITY, "judgment_coverage"),
        SessionError::Anchor(_) => (S::UNPROCESSABLE_ENTITY, "anchor"),
    }
}

fn state_status(e: &StateError) -> (StatusCode, &'static str) {
    use StatusCode as S;
    match e {
        StateError::NoDataset(_) | StateError::NoSession(_) | StateError::NoDraft(_) | StateError::NoItem(_) => {
            (S::NOT_FOUND, "not_found")
        }
        StateError::DatasetExists(_) | StateError::SessionExists(_) => (S::CONFLICT, "exists"),
        StateError::Ingest(_) => (S::BAD_REQUEST, "invalid_dataset"),
        StateError::Session(e) => session_status(e),
        StateError::ColdStart(ColdStartError::NotFound(_)) => (S::NOT_FOUND, "not_found"),
        StateError::ColdStart(_) => (S::UNPROCESSABLE_ENTITY, "cold_start"),
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let (status, kind) = match &e {
            ServiceError::Store(StoreError::State(s)) | ServiceError::Export(ExportError::State(s)) => state_status(s),
            ServiceError::Store(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage"),
            ServiceError::Export(ExportError::UnknownFormat(_)) => (StatusCode::BAD_REQUEST, "bad_format"),
            ServiceError::Export(_) => (StatusCode::INTERNAL_SERVER_ERROR, "export"),
            ServiceError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
        };
        ApiError::new(status, kind, e)
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_dataset", e)
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateDataset {
    pub id: String,
    pub items: Vec<Item>,
    #[serde(default)]
    pub anchors: AnchorsFile,
}

async fn create_dataset(State(app): State<AppState>, Json(req): Json<CreateDataset>) -> Result<Response, ApiError> {
    let ds = Dataset::new(req.id, req.items, req.anchors.to_pool()?)?;
    let summary = app.lock().create_dataset(ds)?;
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

async fn dataset_summary(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<crate::service::DatasetSummary> {
    Ok(Json(app.lock().dataset_summary(&id)?))
}

async fn create_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<SessionRequest>,
) -> Result<Response, ApiError> {
    let now = (app.clock)();
    let created = app.lock().create_session(&id, req, now)?;
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn task(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<crate::service::TaskPayload> {
    Ok(Json(app.lock().task(&SessionId::new(id))?))
}

async fn submit(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(step): Json<StepRequest>,
) -> ApiResult<crate::service::StepResponse> {
    let now = (app.clock)();
    Ok(Json(app.lock().submit(&SessionId::new(id), step, now)?))
}

#[derive(Debug, Deserialize)]
struct ScrubQuery {
    pos: f64,
}

async fn scrub(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ScrubQuery>,
) -> ApiResult<Vec<crate::service::AnchorPayload>> {
    let pos = ScalePos::new(q.pos).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "range", e))?;
    Ok(Json(app.lock().scrub(&SessionId::new(id), pos)?))
}

async fn quality(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<goldilocks_core::protocol::QualityReport> {
    Ok(Json(app.lock().quality(&SessionId::new(id))?))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    #[serde(default = "default_format")]
    format: String,
}

fn default_format() -> String {
    "jsonl".into()
}

async fn export(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> Result<Response, ApiError> {
    let body = app.lock().export(&id, &q.format)?;
    let ctype = if q.format == "csv" { "text/csv" } else { "application/x-ndjson" };
    Ok(([(header::CONTENT_TYPE, ctype)], body).into_response())
}

async fn analyze(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<goldilocks_core::analysis::AnalysisReport> {
    Ok(Json(app.lock().analyze(&id)?))
}

#[derive(Debug, Serialize)]
pub struct DraftView {
    pub candidates: Vec<ItemId>,
    pub undrawn: usize,
    pub placements: usize,
}

async fn draft(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<DraftView> {
    let svc = app.lock();
    let d = svc.draft(&id)?;
    Ok(Json(DraftView {
        candidates: d.candidates().to_vec(),
        undrawn: d.undrawn().len(),
        placements: d.placement_count(),
    }))
}

#[derive(Debug, Default, Deserialize)]
struct OpenDraft {
    #[serde(default)]
    semantic: Vec<SemanticAnchor>,
}

async fn open_draft(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Option<Json<OpenDraft>>,
) -> Result<StatusCode, ApiError> {
    let semantic = body.map(|b| b.0.semantic).unwrap_or_default();
    app.lock().cold_start(&id, ColdStartOp::Open { semantic })?;
    Ok(StatusCode::CREATED)
}

#[derive(Debug, Deserialize)]
struct DrawRequest {
    n: usize,
    #[serde(default)]
    seed: Option<u64>,
}

async fn draw(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<DrawRequest>,
) -> ApiResult<DrawOutcome> {
    Ok(Json(app.lock().cold_start_draw(&id, req.n, req.seed)?))
}

#[derive(Debug, Deserialize)]
struct ItemRequest {
    item: ItemId,
}

async fn drop_candidate(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<ItemRequest>,
) -> Result<StatusCode, ApiError> {
    app.lock().cold_start(&id, ColdStartOp::Drop { item: req.item })?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Deserialize)]
struct PlaceRequest {
    annotator: AnnotatorId,
    item: ItemId,
    pos: f64,
}

async fn place(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<PlaceRequest>,
) -> Result<StatusCode, ApiError> {
    app.lock().cold_start(&id, ColdStartOp::Place { annotator: req.annotator, item: req.item, pos: req.pos })?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Deserialize)]
struct FinalizeRequest {
    #[serde(default = "default_min_count")]
    min_count: usize,
}

fn default_min_count() -> usize {
    1
}

async fn finalize(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<FinalizeRequest>,
) -> ApiResult<crate::service::DatasetSummary> {
    let mut svc = app.lock();
    svc.cold_start(&id, ColdStartOp::Finalize { min_count: req.min_count })?;
    Ok(Json(svc.dataset_summary(&id)?))
}

async fn reintroduce(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<ItemRequest>,
) -> ApiResult<Item> {
    match app.lock().cold_start(&id, ColdStartOp::Reintroduce { item: req.item })? {
        Outcome::Reintroduced(item) => Ok(Json(item)),
        other => unreachable!("reintroduce produced {other:?}"),
    }
}
