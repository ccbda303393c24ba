//! HTTP + JSON questionnaire service.
//!
//! Routes:
//!
//! | Method | Path | Purpose |
//! |---|---|---|
//! | POST | `/sessions` | start or resume a decision maker's sheet |
//! | GET | `/sessions/{id}/question` | next unanswered question |
//! | POST | `/sessions/{id}/answer` | record an answer for the current question |
//! | GET | `/panel/results` | evaluate all complete sheets |
//! | POST | `/panel/whatif` | evaluate with one answer replaced, without saving |
//!
//! Errors are returned as `{code, message, details}` with a stable `code`.
//! The workspace sheet files are the only session state that matters: a
//! session token is a handle on a decision maker, and its cursor is the
//! number of questions that decision maker has answered.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Mutex;
use tower_http::services::ServeDir;

use crate::engine::{self, local_weights, Mode, PerMode, WeightVector};
use crate::fuzzy::{LinguisticTerm, ScaleTable};
use crate::hierarchy::{ComparisonSet, Level, Node, NodeId, Question};
use crate::judgment::{build_matrix, Answer, Favored, PairRef, ResponseSheet};
use crate::workspace::{is_valid_dm_id, Workspace, WorkspaceError};

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    details: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            details: Value::Null,
        }
    }

    fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "code": self.code, "message": self.message, "details": self.details });
        (self.status, Json(body)).into_response()
    }
}

impl From<WorkspaceError> for ApiError {
    fn from(e: WorkspaceError) -> Self {
        match e {
            WorkspaceError::Locked(_) => ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "workspace_locked",
                e.to_string(),
            ),
            WorkspaceError::NoCompleteSheets => {
                ApiError::new(StatusCode::CONFLICT, "no_complete_sheets", e.to_string())
            }
            WorkspaceError::InvalidDecisionMaker(_) => ApiError::new(
                StatusCode::BAD_REQUEST,
                "invalid_decision_maker",
                e.to_string(),
            ),
            other => ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "internal",
                other.to_string(),
            ),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum SessionStatus {
    InProgress,
    Complete,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionView {
    pub session_id: String,
    pub decision_maker_id: String,
    pub total_questions: usize,
    pub cursor: usize,
    pub status: SessionStatus,
}

struct Inner {
    workspace: Workspace,
    sets: Vec<ComparisonSet>,
    questions: Vec<Question>,
    // session id -> decision maker id
    sessions: Mutex<HashMap<String, String>>,
    writer: Mutex<()>,
}

/// Shared state behind every route.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(workspace: Workspace) -> Self {
        let h = workspace.hierarchy();
        // Workspaces only open with a valid hierarchy.
        let sets = h.comparison_sets().expect("valid hierarchy");
        let questions = h.questions().expect("valid hierarchy");
        AppState {
            inner: Arc::new(Inner {
                workspace,
                sets,
                questions,
                sessions: Mutex::new(HashMap::new()),
                writer: Mutex::new(()),
            }),
        }
    }

    fn ws(&self) -> &Workspace {
        &self.inner.workspace
    }

    fn total(&self) -> usize {
        self.inner.questions.len()
    }

    /// Index of the first unanswered question, or `None` when complete.
    fn next_question(&self, sheet: &ResponseSheet) -> Option<&Question> {
        self.inner
            .questions
            .iter()
            .find(|q| sheet.find(&pair_of(q)).is_none())
    }

    fn answered(&self, sheet: &ResponseSheet) -> usize {
        self.inner
            .questions
            .iter()
            .filter(|q| sheet.find(&pair_of(q)).is_some())
            .count()
    }

    fn view(&self, session_id: &str, sheet: &ResponseSheet) -> SessionView {
        let cursor = self.answered(sheet);
        SessionView {
            session_id: session_id.to_string(),
            decision_maker_id: sheet.decision_maker_id.clone(),
            total_questions: self.total(),
            cursor,
            status: if cursor == self.total() {
                SessionStatus::Complete
            } else {
                SessionStatus::InProgress
            },
        }
    }

    fn empty_sheet(&self, dm: &str) -> ResponseSheet {
        ResponseSheet::new(dm, self.ws().hierarchy_hash())
    }

    fn load_sheet(&self, dm: &str) -> ApiResult<ResponseSheet> {
        Ok(self
            .ws()
            .load_sheet(dm)?
            .unwrap_or_else(|| self.empty_sheet(dm)))
    }

    async fn session_dm(&self, session_id: &str, claimed: Option<&str>) -> ApiResult<String> {
        let dm = self
            .inner
            .sessions
            .lock()
            .await
            .get(session_id)
            .cloned()
            .ok_or_else(|| {
                ApiError::new(StatusCode::NOT_FOUND, "unknown_session", "no such session")
            })?;
        match claimed {
            None | Some("") => Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "missing_decision_maker",
                "decisionMakerId is required on session routes",
            )),
            Some(c) if c != dm => Err(ApiError::new(
                StatusCode::FORBIDDEN,
                "decision_maker_mismatch",
                format!("session belongs to a different decision maker than {c:?}"),
            )),
            Some(_) => Ok(dm),
        }
    }
}

fn pair_of(q: &Question) -> PairRef {
    PairRef {
        set: q.set,
        first: q.first.id.clone(),
        second: q.second.id.clone(),
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", e.to_string()))
}

fn parse_term(term: &str) -> ApiResult<LinguisticTerm> {
    term.parse().map_err(|e: crate::fuzzy::FuzzyError| {
        ApiError::new(StatusCode::BAD_REQUEST, "unknown_term", e.to_string()).with_details(json!({
            "term": term,
            "options": LinguisticTerm::ALL.map(LinguisticTerm::label),
        }))
    })
}

fn parse_favored(favored: &str) -> ApiResult<Favored> {
    match favored.to_ascii_lowercase().as_str() {
        "first" => Ok(Favored::First),
        "second" => Ok(Favored::Second),
        _ => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "invalid_favored",
            format!("favored must be \"first\" or \"second\", got {favored:?}"),
        )),
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CreateSession {
    #[serde(default)]
    decision_maker_id: String,
    #[serde(default)]
    reopen: bool,
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: CreateSession = parse_body(&body)?;
    let dm = req.decision_maker_id.trim().to_string();
    if dm.is_empty() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "missing_decision_maker",
            "decisionMakerId must not be empty",
        ));
    }
    if !is_valid_dm_id(&dm) {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "invalid_decision_maker",
            format!("decisionMakerId {dm:?} may only contain letters, digits, '-', '_', '.', '@'"),
        ));
    }

    let _guard = state.inner.writer.lock().await;
    let existing = state.ws().load_sheet(&dm)?;
    let (sheet, created) = match existing {
        Some(sheet) if state.answered(&sheet) == state.total() => {
            if !req.reopen {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "sheet_complete",
                    format!("{dm} has completed the questionnaire; pass reopen=true to revise"),
                ));
            }
            let lock = state.ws().lock()?;
            state.ws().archive_sheet(&lock, &dm)?;
            let fresh = state.empty_sheet(&dm);
            state.ws().save_sheet(&lock, &fresh)?;
            (fresh, true)
        }
        Some(sheet) => (sheet, false),
        None => {
            let lock = state.ws().lock()?;
            let fresh = state.empty_sheet(&dm);
            state.ws().save_sheet(&lock, &fresh)?;
            (fresh, true)
        }
    };

    let session_id = uuid::Uuid::new_v4().simple().to_string();
    state
        .inner
        .sessions
        .lock()
        .await
        .insert(session_id.clone(), dm);
    let status = if created {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((status, Json(state.view(&session_id, &sheet))).into_response())
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct DmQuery {
    decision_maker_id: Option<String>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct QuestionView {
    pub session_id: String,
    pub index: usize,
    pub cursor: usize,
    pub total_questions: usize,
    pub set: usize,
    pub level: Level,
    pub context_node: String,
    pub context_label: String,
    pub first_node: Node,
    pub second_node: Node,
    pub prompt_text: String,
    pub options: [&'static str; 5],
}

async fn get_question(
    State(state): State<AppState>,
    Path(session_id): Path<String>,
    Query(q): Query<DmQuery>,
) -> ApiResult<Json<QuestionView>> {
    let dm = state
        .session_dm(&session_id, q.decision_maker_id.as_deref())
        .await?;
    let sheet = state.load_sheet(&dm)?;
    let cursor = state.answered(&sheet);
    let question = state.next_question(&sheet).ok_or_else(|| {
        ApiError::new(
            StatusCode::CONFLICT,
            "session_complete",
            "all questions are answered",
        )
    })?;
    Ok(Json(QuestionView {
        session_id,
        index: question.index,
        cursor,
        total_questions: state.total(),
        set: question.set,
        level: question.level,
        context_node: question.context.key().to_string(),
        context_label: question.context_label.clone(),
        first_node: question.first.clone(),
        second_node: question.second.clone(),
        prompt_text: question.prompt(),
        options: LinguisticTerm::ALL.map(LinguisticTerm::label),
    }))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct AnswerBody {
    decision_maker_id: Option<String>,
    /// Comparison set of the question being answered; optional echo that
    /// disambiguates retries.
    #[serde(default)]
    set: Option<usize>,
    first: NodeId,
    second: NodeId,
    favored: String,
    term: String,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CompletedSet {
    pub set: usize,
    pub level: Level,
    pub context_label: String,
    pub weights: PerMode<WeightVector>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnswerView {
    #[serde(flatten)]
    pub session: SessionView,
    pub completeness: f64,
    /// True when this request repeated an answer that was already recorded.
    pub replayed: bool,
    pub completed_set: Option<CompletedSet>,
}

async fn post_answer(
    State(state): State<AppState>,
    Path(session_id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<AnswerView>> {
    let req: AnswerBody = parse_body(&body)?;
    let dm = state
        .session_dm(&session_id, req.decision_maker_id.as_deref())
        .await?;
    let term = parse_term(&req.term)?;
    let favored = parse_favored(&req.favored)?;

    let _guard = state.inner.writer.lock().await;
    let mut sheet = state.load_sheet(&dm)?;

    let next = state.next_question(&sheet).cloned();
    let is_next = next.as_ref().is_some_and(|q| {
        q.first.id == req.first && q.second.id == req.second && req.set.is_none_or(|s| s == q.set)
    });
    if !is_next {
        // A retry of an answer that is already recorded is acknowledged
        // without change: the echoed set's pair, or else the latest answer.
        let previous = match req.set {
            Some(set) => sheet.find(&PairRef {
                set,
                first: req.first.clone(),
                second: req.second.clone(),
            }),
            None => sheet.answers.last(),
        };
        let replay = previous.is_some_and(|prev| {
            if prev.first == req.first && prev.second == req.second {
                prev.favored == favored && prev.term == term
            } else {
                prev.first == req.second
                    && prev.second == req.first
                    && prev.favored != favored
                    && prev.term == term
            }
        });
        if replay {
            let session = state.view(&session_id, &sheet);
            return Ok(Json(AnswerView {
                completeness: session.cursor as f64 / state.total() as f64,
                session,
                replayed: true,
                completed_set: None,
            }));
        }
    }

    let Some(question) = next else {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "session_complete",
            "all questions are answered",
        ));
    };
    if !is_next {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "stale_question",
            "answer does not match the current question",
        )
        .with_details(json!({
            "expected": { "set": question.set, "first": question.first.id, "second": question.second.id },
            "got": { "set": req.set, "first": req.first, "second": req.second },
        })));
    }

    let answer = Answer {
        set: question.set,
        first: question.first.id.clone(),
        second: question.second.id.clone(),
        favored,
        term,
    };
    sheet.record(answer, &state.inner.sets).map_err(|e| {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_answer",
            e.to_string(),
        )
    })?;
    {
        let lock = state.ws().lock()?;
        state.ws().save_sheet(&lock, &sheet)?;
    }

    let set = &state.inner.sets[question.set];
    let in_set: Vec<&Answer> = sheet
        .answers
        .iter()
        .filter(|a| a.set == question.set)
        .collect();
    let completed_set = if in_set.len() == set.pair_count() {
        build_matrix(set, &in_set, ScaleTable::canonical())
            .ok()
            .and_then(|m| local_weights(&m).ok())
            .map(|weights| CompletedSet {
                set: question.set,
                level: set.level,
                context_label: question.context_label.clone(),
                weights,
            })
    } else {
        None
    };

    let session = state.view(&session_id, &sheet);
    Ok(Json(AnswerView {
        completeness: session.cursor as f64 / state.total() as f64,
        session,
        replayed: false,
        completed_set,
    }))
}

async fn panel_results(State(state): State<AppState>) -> ApiResult<Json<Value>> {
    let (sheets, warnings) = state.ws().complete_sheets()?;
    if sheets.is_empty() {
        return Err(WorkspaceError::NoCompleteSheets.into());
    }
    let report = engine::evaluate(state.ws().hierarchy(), &sheets)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    let mut body = serde_json::to_value(&report).expect("report serializes");
    let obj = body.as_object_mut().expect("object");
    obj.insert("panelSize".into(), json!(report.panel_size()));
    obj.insert("warnings".into(), json!(warnings));
    Ok(Json(body))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct OverrideBody {
    decision_maker_id: String,
    set: usize,
    first: NodeId,
    second: NodeId,
    favored: String,
    term: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct WhatIfBody {
    #[serde(rename = "override")]
    replacement: OverrideBody,
    /// Restrict the base panel to these decision makers.
    #[serde(default)]
    decision_maker_ids: Option<Vec<String>>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WhatIfView {
    pub panel_size: usize,
    pub baseline: PerMode<WeightVector>,
    pub what_if: PerMode<WeightVector>,
    pub delta: PerMode<WeightVector>,
}

async fn panel_whatif(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<WhatIfView>> {
    let req: WhatIfBody = parse_body(&body)?;
    let term = parse_term(&req.replacement.term)?;
    let favored = parse_favored(&req.replacement.favored)?;
    let (mut sheets, _) = state.ws().complete_sheets()?;
    if let Some(ids) = &req.decision_maker_ids {
        sheets.retain(|s| ids.contains(&s.decision_maker_id));
    }
    if sheets.is_empty() {
        return Err(WorkspaceError::NoCompleteSheets.into());
    }

    let o = &req.replacement;
    let not_found =
        |what: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "override_not_found", what);
    let mut modified = sheets.clone();
    let sheet = modified
        .iter_mut()
        .find(|s| s.decision_maker_id == o.decision_maker_id)
        .ok_or_else(|| not_found(format!("no complete sheet for {}", o.decision_maker_id)))?;
    let pair = PairRef {
        set: o.set,
        first: o.first.clone(),
        second: o.second.clone(),
    };
    let slot = sheet
        .answers
        .iter_mut()
        .find(|a| a.pair().same_pair(&pair))
        .ok_or_else(|| not_found(format!("no answered pair {pair}")))?;
    *slot = Answer {
        set: o.set,
        first: o.first.clone(),
        second: o.second.clone(),
        favored,
        term,
    };

    let h = state.ws().hierarchy();
    let internal = |e: engine::EngineError| {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_override",
            e.to_string(),
        )
    };
    let baseline = engine::evaluate(h, &sheets)
        .map_err(internal)?
        .aggregate
        .alternative_scores;
    let what_if = engine::evaluate(h, &modified)
        .map_err(internal)?
        .aggregate
        .alternative_scores;
    let delta = PerMode::from_fn(|mode: Mode| {
        WeightVector::from_pairs(
            what_if[mode]
                .iter()
                .map(|(id, w)| (id.clone(), w - baseline[mode].get(id).unwrap_or(0.0))),
        )
    });
    Ok(Json(WhatIfView {
        panel_size: sheets.len(),
        baseline,
        what_if,
        delta,
    }))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

/// Build the router; `ui_dir` adds a static file root.
pub fn router(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/question", get(get_question))
        .route("/sessions/{id}/answer", post(post_answer))
        .route("/panel/results", get(panel_results))
        .route("/panel/whatif", post(panel_whatif))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(not_found),
    }
}

/// Serve until the process is interrupted.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    ui_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    let app = router(state, ui_dir);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
