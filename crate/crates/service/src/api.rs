use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fedsearch::domain::DomainError;
use fedsearch::federation::FederationError;
use fedsearch::vertical::IndexError;
use fedsearch::{ClickKind, Intent, RankedItem, ScoredDoc, Vertical};
use serde::{Deserialize, Serialize};

use crate::store::{ClickError, ClickOutcome};
use crate::AppState;

pub const SCHEMA_VERSION: u32 = 1;

const TITLE_WORDS: usize = 8;
const SNIPPET_CHARS: usize = 160;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/search", get(search))
        .route("/click", post(click))
        .route("/members/{id}/intents", get(member_intents))
        .route("/healthz", get(healthz))
        .with_state(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub schema_version: u32,
    pub error: String,
    pub message: String,
}

#[derive(Debug)]
pub enum ApiError {
    UnknownMember(String),
    UnknownSerp(String),
    EmptyQuery,
    InvalidPosition(String),
    HeaderClickOnIndividual(usize),
    BadRequest(String),
    Internal(String),
}

impl ApiError {
    fn parts(&self) -> (StatusCode, &'static str, String) {
        match self {
            ApiError::UnknownMember(id) => (
                StatusCode::NOT_FOUND,
                "UnknownMember",
                format!("no member `{id}`"),
            ),
            ApiError::UnknownSerp(id) => (
                StatusCode::NOT_FOUND,
                "UnknownSerp",
                format!("serp `{id}` was not served here or has been evicted"),
            ),
            ApiError::EmptyQuery => (
                StatusCode::BAD_REQUEST,
                "EmptyQuery",
                "query has no terms".into(),
            ),
            ApiError::InvalidPosition(msg) => {
                (StatusCode::BAD_REQUEST, "InvalidPosition", msg.clone())
            }
            ApiError::HeaderClickOnIndividual(p) => (
                StatusCode::BAD_REQUEST,
                "HeaderClickOnIndividual",
                format!("position {p} is an individual result and has no header"),
            ),
            ApiError::BadRequest(msg) => (StatusCode::BAD_REQUEST, "BadRequest", msg.clone()),
            ApiError::Internal(msg) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "Internal", msg.clone())
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, error, message) = self.parts();
        let body = ErrorBody {
            schema_version: SCHEMA_VERSION,
            error: error.into(),
            message,
        };
        (status, Json(body)).into_response()
    }
}

impl From<ClickError> for ApiError {
    fn from(e: ClickError) -> Self {
        match e {
            ClickError::UnknownSerp(id) => ApiError::UnknownSerp(id),
            ClickError::Invalid(DomainError::HeaderClickOnIndividual(p)) => {
                ApiError::HeaderClickOnIndividual(p)
            }
            ClickError::Invalid(other) => ApiError::InvalidPosition(other.to_string()),
            ClickError::Io(e) => ApiError::Internal(format!("click log: {e}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocView {
    pub doc_id: String,
    pub title: String,
    pub snippet: String,
    pub score: f64,
}

impl From<&ScoredDoc> for DocView {
    fn from(s: &ScoredDoc) -> Self {
        let text = &s.doc.text;
        let title = text
            .split_whitespace()
            .take(TITLE_WORDS)
            .collect::<Vec<_>>()
            .join(" ");
        let snippet = match text.char_indices().nth(SNIPPET_CHARS) {
            Some((cut, _)) => format!("{}…", &text[..cut]),
            None => text.clone(),
        };
        DocView {
            doc_id: s.doc.doc_id.clone(),
            title,
            snippet,
            score: s.base_score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ItemView {
    Result {
        position: usize,
        vertical: Vertical,
        doc_id: String,
        title: String,
        snippet: String,
        score: f64,
    },
    Block {
        position: usize,
        vertical: Vertical,
        header: String,
        block_score: f64,
        children: Vec<DocView>,
    },
}

impl ItemView {
    pub fn new(position: usize, item: &RankedItem) -> Self {
        match item {
            RankedItem::PrimaryIndividual { scored } => {
                let DocView {
                    doc_id,
                    title,
                    snippet,
                    score,
                } = DocView::from(scored);
                ItemView::Result {
                    position,
                    vertical: scored.doc.vertical,
                    doc_id,
                    title,
                    snippet,
                    score,
                }
            }
            RankedItem::SecondaryBlock {
                vertical,
                docs,
                block_score,
            } => ItemView::Block {
                position,
                vertical: *vertical,
                header: vertical.to_string(),
                block_score: *block_score,
                children: docs.iter().map(DocView::from).collect(),
            },
        }
    }

    pub fn position(&self) -> usize {
        match self {
            ItemView::Result { position, .. } | ItemView::Block { position, .. } => *position,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub schema_version: u32,
    /// Absent when nothing matched; there is nothing to click.
    pub serp_id: Option<String>,
    pub query: String,
    pub member_id: String,
    pub primary_vertical: Option<Vertical>,
    pub no_eligible_vertical: bool,
    pub items: Vec<ItemView>,
}

#[derive(Debug, Deserialize)]
pub struct SearchParams {
    #[serde(default)]
    q: String,
    #[serde(default)]
    member: String,
}

async fn search(
    State(state): State<Arc<AppState>>,
    Query(params): Query<SearchParams>,
) -> Result<Json<SearchResponse>, ApiError> {
    let snapshot = state.snapshot();
    let member = snapshot
        .members
        .get(&params.member)
        .ok_or_else(|| ApiError::UnknownMember(params.member.clone()))?;
    let mut response = SearchResponse {
        schema_version: SCHEMA_VERSION,
        serp_id: None,
        query: params.q.clone(),
        member_id: member.member_id.clone(),
        primary_vertical: None,
        no_eligible_vertical: false,
        items: Vec::new(),
    };
    let mut serp = match fedsearch::federated_search(
        &params.q,
        member,
        &snapshot.engine.indexes,
        &snapshot.engine.scorer,
        snapshot.engine.config,
    ) {
        Ok(serp) => serp,
        Err(FederationError::Index(IndexError::EmptyQuery)) => return Err(ApiError::EmptyQuery),
        Err(FederationError::NoEligibleVertical) => {
            response.no_eligible_vertical = true;
            return Ok(Json(response));
        }
        Err(e) => return Err(ApiError::Internal(e.to_string())),
    };
    serp.serp_id = uuid::Uuid::new_v4().simple().to_string();
    response.serp_id = Some(serp.serp_id.clone());
    response.primary_vertical = Some(serp.primary_vertical);
    response.items = serp
        .items
        .iter()
        .enumerate()
        .map(|(i, item)| ItemView::new(i, item))
        .collect();
    state
        .with_clicks(|store| store.record_impression(serp))
        .map_err(|e| ApiError::Internal(format!("click log: {e}")))?;
    Ok(Json(response))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClickRequest {
    pub serp_id: String,
    pub position: i64,
    pub click_kind: ClickKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickAck {
    pub schema_version: u32,
    pub serp_id: String,
    pub position: usize,
    pub click_kind: ClickKind,
    /// True when this exact click was already recorded.
    pub duplicate: bool,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

async fn click(
    State(state): State<Arc<AppState>>,
    body: Result<Json<ClickRequest>, JsonRejection>,
) -> Result<Json<ClickAck>, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let position = usize::try_from(req.position)
        .map_err(|_| ApiError::InvalidPosition(format!("position {} is negative", req.position)))?;
    let outcome = state.with_clicks(|store| {
        store.record_click(&req.serp_id, position, req.click_kind, unix_now())
    })?;
    Ok(Json(ClickAck {
        schema_version: SCHEMA_VERSION,
        serp_id: req.serp_id,
        position,
        click_kind: req.click_kind,
        duplicate: outcome == ClickOutcome::Duplicate,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentsResponse {
    pub schema_version: u32,
    pub member_id: String,
    pub intent_scores: BTreeMap<Intent, f64>,
    pub active_intents: BTreeSet<Intent>,
}

async fn member_intents(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<IntentsResponse>, ApiError> {
    let snapshot = state.snapshot();
    let member = snapshot
        .members
        .get(&id)
        .ok_or(ApiError::UnknownMember(id))?;
    Ok(Json(IntentsResponse {
        schema_version: SCHEMA_VERSION,
        member_id: member.member_id.clone(),
        intent_scores: member.intent_scores.clone(),
        active_intents: member.active_intents.clone(),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub schema_version: u32,
    pub status: String,
    pub members: usize,
    pub verticals: Vec<Vertical>,
}

async fn healthz(State(state): State<Arc<AppState>>) -> Json<Health> {
    let snapshot = state.snapshot();
    Json(Health {
        schema_version: SCHEMA_VERSION,
        status: "ok".into(),
        members: snapshot.members.len(),
        verticals: snapshot.engine.indexes.iter().map(|i| i.vertical).collect(),
    })
}
