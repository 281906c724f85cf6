//! HTTP front end for the trainer.
//!
//! | method | path                              | body                                   |
//! |--------|-----------------------------------|----------------------------------------|
//! | POST   | `/sessions`                       | `{subject, char_gap_ms, config?}`      |
//! | GET    | `/sessions/{id}`                  |                                        |
//! | POST   | `/sessions/{id}/transmit`         | `{word}`                               |
//! | POST   | `/sessions/{id}/guess`            | `{record_id, guess}`                   |
//! | GET    | `/sessions/{id}/timeline/{record}`|                                        |
//! | POST   | `/sessions/{id}/rating`           | `{rating}`                             |
//! | POST   | `/sessions/{id}/close`            |                                        |
//! | GET    | `/report?gaps=2000,1500&reference=1500&family=all_pairs` |                 |
//!
//! Every body is JSON. Failures come back as `{"error": kind, "message": text}`.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use brailleband::emulator::{MotorTimeline, NodeInterval};
use brailleband::link::LinkError;
use brailleband::stats::Family;
use brailleband::trainer::{
    Session, SessionReport, SessionStore, TrainerError, TrialConfig, WordRecord,
};
use serde::{Deserialize, Serialize};

pub type SharedStore = Arc<SessionStore>;

pub fn router(store: SharedStore) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/transmit", post(transmit))
        .route("/sessions/{id}/guess", post(guess))
        .route("/sessions/{id}/timeline/{record}", get(timeline))
        .route("/sessions/{id}/rating", post(rate))
        .route("/sessions/{id}/close", post(close))
        .route("/report", get(report))
        .with_state(store)
}

/// Serve until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, store: SharedStore) -> std::io::Result<()> {
    axum::serve(listener, router(store)).await
}

#[derive(Debug)]
pub struct ApiError(pub TrainerError);

impl From<TrainerError> for ApiError {
    fn from(e: TrainerError) -> Self {
        ApiError(e)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl ApiError {
    fn status_and_kind(&self) -> (StatusCode, &'static str) {
        use TrainerError::*;
        match &self.0 {
            UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            UnknownRecord(_) => (StatusCode::NOT_FOUND, "unknown_record"),
            SessionClosed(_) => (StatusCode::CONFLICT, "session_closed"),
            AlreadyScored(_) => (StatusCode::CONFLICT, "already_scored"),
            LengthMismatch { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "length_mismatch"),
            InvalidConfig(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_config"),
            InvalidRating(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_rating"),
            InsufficientData => (StatusCode::UNPROCESSABLE_ENTITY, "insufficient_data"),
            Link(LinkError::Braille(_)) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "unsupported_character")
            }
            Link(_) | Emulator(_) => (StatusCode::INTERNAL_SERVER_ERROR, "device"),
            Stats(_) => (StatusCode::UNPROCESSABLE_ENTITY, "stats"),
            Storage(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage"),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = self.status_and_kind();
        let body = ErrorBody {
            error: kind.to_string(),
            message: self.0.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateSession {
    pub subject: String,
    pub char_gap_ms: u64,
    #[serde(default)]
    pub config: Option<TrialConfig>,
}

async fn create_session(
    State(store): State<SharedStore>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<Session>), ApiError> {
    let s = store.create(
        &req.subject,
        req.char_gap_ms,
        req.config.unwrap_or_default(),
    )?;
    Ok((StatusCode::CREATED, Json(s)))
}

async fn get_session(
    State(store): State<SharedStore>,
    Path(id): Path<String>,
) -> ApiResult<Session> {
    Ok(Json(store.session(&id)?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TransmitRequest {
    pub word: String,
}

async fn transmit(
    State(store): State<SharedStore>,
    Path(id): Path<String>,
    Json(req): Json<TransmitRequest>,
) -> ApiResult<WordRecord> {
    Ok(Json(store.transmit(&id, &req.word)?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GuessRequest {
    pub record_id: usize,
    pub guess: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GuessResponse {
    pub record: WordRecord,
    pub accuracy_pct: f64,
    pub session_accuracy_pct: f64,
}

async fn guess(
    State(store): State<SharedStore>,
    Path(id): Path<String>,
    Json(req): Json<GuessRequest>,
) -> ApiResult<GuessResponse> {
    let record = store.guess(&id, req.record_id, &req.guess)?;
    let session = store.session(&id)?;
    let accuracy_pct = record.guess.as_ref().map_or(0.0, |g| g.accuracy_pct());
    Ok(Json(GuessResponse {
        record,
        accuracy_pct,
        session_accuracy_pct: session.accuracy_pct().unwrap_or(0.0),
    }))
}

/// Flattened timeline for playback: intervals sorted by switch-on time.
#[derive(Debug, Serialize, Deserialize)]
pub struct TimelineResponse {
    pub session: String,
    pub record: usize,
    pub horizon_ms: u64,
    pub events: Vec<NodeInterval>,
}

impl TimelineResponse {
    fn new(session: String, record: usize, timeline: &MotorTimeline) -> Self {
        TimelineResponse {
            session,
            record,
            horizon_ms: timeline.horizon_ms(),
            events: timeline.events(),
        }
    }
}

async fn timeline(
    State(store): State<SharedStore>,
    Path((id, record)): Path<(String, usize)>,
) -> ApiResult<TimelineResponse> {
    let t = store.timeline(&id, record)?;
    Ok(Json(TimelineResponse::new(id, record, &t)))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RatingRequest {
    pub rating: u8,
}

async fn rate(
    State(store): State<SharedStore>,
    Path(id): Path<String>,
    Json(req): Json<RatingRequest>,
) -> ApiResult<Session> {
    Ok(Json(store.rate(&id, req.rating)?))
}

async fn close(State(store): State<SharedStore>, Path(id): Path<String>) -> ApiResult<Session> {
    Ok(Json(store.close(&id)?))
}

#[derive(Debug, Default, Deserialize)]
pub struct ReportQuery {
    /// Comma-separated gaps in ms; all gaps when absent.
    pub gaps: Option<String>,
    pub reference: Option<u64>,
    #[serde(default)]
    pub family: Family,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReportResponse {
    #[serde(flatten)]
    pub report: SessionReport,
    /// Plain-text tables, same layout as the CLI.
    pub text: String,
}

/// Parse `"2000, 1500"` into gaps.
pub fn parse_gaps(raw: &str) -> Result<Vec<u64>, TrainerError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| TrainerError::InvalidConfig(format!("bad gap {s:?}")))
        })
        .collect()
}

async fn report(
    State(store): State<SharedStore>,
    Query(q): Query<ReportQuery>,
) -> ApiResult<ReportResponse> {
    let gaps = q.gaps.as_deref().map(parse_gaps).transpose()?;
    let report = store.report(gaps.as_deref(), q.reference, q.family)?;
    let text = report.stats.to_text();
    Ok(Json(ReportResponse { report, text }))
}
