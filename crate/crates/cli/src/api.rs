//! REST/JSON API.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | GET | `/api/health` | | `{status, version}` |
//! | POST | `/api/sessions` | `{nl, settings?}` | session, 201 |
//! | GET | `/api/sessions/{id}` | | session |
//! | POST | `/api/sessions/{id}/translate` | | session |
//! | POST | `/api/sessions/{id}/subtranslations` | `{fragment, formulaText}` | session |
//! | PUT | `/api/sessions/{id}/subtranslations/{fragmentHash}` | `{formulaText}` | session |
//! | DELETE | `/api/sessions/{id}/subtranslations/{fragmentHash}` | | session |
//! | POST | `/api/sessions/{id}/select` | `{fragment?, index}` | session |
//! | POST | `/api/sessions/{id}/approve` | | session |
//! | PUT | `/api/sessions/{id}/settings` | partial settings | session |
//! | GET | `/api/templates` | | template summaries |
//! | GET | `/api/backends` | | backend descriptors |
//! | POST | `/api/equivalent` | `{f, g, bound?}` | `{status, witness?, bound}` |
//!
//! Sessions use the JSON schema of `specloop_core::session::SessionState`.
//! Failures reply with an [`ApiError`] whose `code` is one of
//! [`ERROR_CODES`].

use std::path::Path as FsPath;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Request, State};
use axum::http::{HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use specloop_core::backend::BackendError;
use specloop_core::ltl::{self, Bound, EquivError};
use specloop_core::session::{SessionError, SessionManager, SessionState, Settings};
use tower_http::services::ServeDir;

pub const TOKEN_HEADER: &str = "x-specloop-token";
/// Largest prefix or loop length accepted by `/api/equivalent`.
pub const MAX_API_BOUND: usize = 5;

pub const ERROR_CODES: &[&str] = &[
    "invalid_request",
    "unauthorized",
    "not_found",
    "empty_input",
    "empty_fragment",
    "duplicate_fragment",
    "unknown_fragment",
    "invalid_formula",
    "stale_result",
    "no_result",
    "bad_index",
    "nothing_to_approve",
    "session_approved",
    "invalid_settings",
    "unknown_template",
    "unknown_backend",
    "backend_auth",
    "backend_rate_limited",
    "backend_timeout",
    "backend_no_rule",
    "backend_failure",
    "no_candidate",
    "session_not_found",
    "session_corrupt",
    "storage_failure",
    "alphabet_too_large",
    "invalid_config",
    "internal",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(code: &'static str, message: impl Into<String>) -> ApiError {
        debug_assert!(ERROR_CODES.contains(&code), "{code}");
        ApiError { code: code.to_string(), message: message.into(), detail: None }
    }

    fn with_detail(mut self, detail: Value) -> ApiError {
        self.detail = Some(detail);
        self
    }

    pub fn status(&self) -> StatusCode {
        match self.code.as_str() {
            "invalid_request" => StatusCode::BAD_REQUEST,
            "unauthorized" => StatusCode::UNAUTHORIZED,
            "not_found" | "session_not_found" | "unknown_fragment" => StatusCode::NOT_FOUND,
            "duplicate_fragment" | "stale_result" | "no_result" | "nothing_to_approve" | "session_approved" => {
                StatusCode::CONFLICT
            }
            "backend_rate_limited" => StatusCode::TOO_MANY_REQUESTS,
            "backend_timeout" => StatusCode::GATEWAY_TIMEOUT,
            "backend_auth" | "backend_no_rule" | "backend_failure" | "no_candidate" => StatusCode::BAD_GATEWAY,
            "session_corrupt" | "storage_failure" | "internal" => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> ApiError {
        let base = ApiError { code: e.code().to_string(), message: e.to_string(), detail: None };
        match &e {
            SessionError::InvalidFormula { text, source } => base.with_detail(json!({
                "text": text,
                "position": source.position,
                "expected": source.expected,
                "found": source.found,
            })),
            SessionError::BadIndex { index, len } => base.with_detail(json!({"index": index, "candidates": len})),
            SessionError::Backend(BackendError::RateLimited { retry_after: Some(d) }) => {
                base.with_detail(json!({"retryAfterSecs": d.as_secs()}))
            }
            _ => base,
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> ApiError {
        ApiError::new("invalid_request", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut response = (self.status(), Json(&self)).into_response();
        if let Some(secs) = self.detail.as_ref().and_then(|d| d.get("retryAfterSecs")).and_then(Value::as_u64) {
            if let Ok(v) = HeaderValue::from_str(&secs.to_string()) {
                response.headers_mut().insert("retry-after", v);
            }
        }
        response
    }
}

#[derive(Clone)]
pub struct AppState {
    pub manager: Arc<SessionManager>,
    pub secret: Option<Arc<str>>,
}

impl AppState {
    pub fn new(manager: SessionManager, secret: Option<String>) -> AppState {
        AppState { manager: Arc::new(manager), secret: secret.map(Arc::from) }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::new("internal", e.to_string()))?
}

/// Fields of [`Settings`] a request may override.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SettingsPatch {
    pub backend_id: Option<String>,
    pub template_id: Option<String>,
    pub temperature: Option<f64>,
    pub runs: Option<usize>,
}

impl SettingsPatch {
    fn apply(self, base: &Settings) -> Settings {
        Settings {
            backend_id: self.backend_id.unwrap_or_else(|| base.backend_id.clone()),
            template_id: self.template_id.unwrap_or_else(|| base.template_id.clone()),
            temperature: self.temperature.unwrap_or(base.temperature),
            runs: self.runs.unwrap_or(base.runs),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    nl: String,
    #[serde(default)]
    settings: SettingsPatch,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct AddSubTranslation {
    fragment: String,
    formula_text: String,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct EditSubTranslation {
    formula_text: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Select {
    #[serde(default)]
    fragment: Option<String>,
    index: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EquivalentRequest {
    f: String,
    g: String,
    #[serde(default)]
    bound: Option<Bound>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct TemplateSummary {
    id: String,
    language: String,
    examples: usize,
    stop_token: String,
}

async fn health() -> Json<Value> {
    Json(json!({"status": "ok", "version": env!("CARGO_PKG_VERSION")}))
}

async fn create_session(
    State(app): State<AppState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionState>), ApiError> {
    let Json(body) = body?;
    let state = blocking(move || {
        let settings = body.settings.apply(&Settings::default());
        Ok(app.manager.create(&body.nl, settings)?)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(state)))
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionState> {
    blocking(move || Ok(app.manager.get(&id)?)).await.map(Json)
}

async fn mutate(
    app: AppState,
    id: String,
    op: impl FnOnce(&mut SessionState, &specloop_core::session::Workbench) -> Result<(), SessionError> + Send + 'static,
) -> ApiResult<SessionState> {
    blocking(move || Ok(app.manager.update(&id, op)?.1)).await.map(Json)
}

async fn translate(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionState> {
    mutate(app, id, |s, bench| s.translate(bench)).await
}

async fn add_sub_translation(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<AddSubTranslation>, JsonRejection>,
) -> ApiResult<SessionState> {
    let Json(body) = body?;
    mutate(app, id, move |s, _| s.add(&body.fragment, &body.formula_text)).await
}

fn fragment_for(s: &SessionState, hash: &str) -> Result<String, SessionError> {
    s.find_by_hash(hash).map(|e| e.fragment.clone()).ok_or_else(|| SessionError::UnknownFragment(hash.to_string()))
}

async fn edit_sub_translation(
    State(app): State<AppState>,
    Path((id, hash)): Path<(String, String)>,
    body: Result<Json<EditSubTranslation>, JsonRejection>,
) -> ApiResult<SessionState> {
    let Json(body) = body?;
    mutate(app, id, move |s, _| {
        let fragment = fragment_for(s, &hash)?;
        s.edit(&fragment, &body.formula_text)
    })
    .await
}

async fn delete_sub_translation(
    State(app): State<AppState>,
    Path((id, hash)): Path<(String, String)>,
) -> ApiResult<SessionState> {
    mutate(app, id, move |s, _| {
        let fragment = fragment_for(s, &hash)?;
        s.delete(&fragment)
    })
    .await
}

async fn select(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<Select>, JsonRejection>,
) -> ApiResult<SessionState> {
    let Json(body) = body?;
    mutate(app, id, move |s, _| s.select(body.fragment.as_deref(), body.index)).await
}

async fn approve(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionState> {
    mutate(app, id, |s, _| s.approve()).await
}

async fn update_settings(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<SettingsPatch>, JsonRejection>,
) -> ApiResult<SessionState> {
    let Json(patch) = body?;
    mutate(app, id, move |s, bench| {
        let settings = patch.apply(&s.settings);
        bench.check_settings(&settings)?;
        s.update_settings(settings)
    })
    .await
}

async fn templates(State(app): State<AppState>) -> Json<Vec<TemplateSummary>> {
    let list = app
        .manager
        .workbench()
        .templates
        .iter()
        .map(|t| TemplateSummary {
            id: t.id.clone(),
            language: t.language.clone(),
            examples: t.examples.len(),
            stop_token: t.stop_token.clone(),
        })
        .collect();
    Json(list)
}

async fn backends(State(app): State<AppState>) -> Json<Vec<specloop_core::backend::BackendDescriptor>> {
    Json(app.manager.workbench().backends.descriptors())
}

fn parse_formula(field: &str, text: &str) -> Result<ltl::Formula, ApiError> {
    ltl::parse(text).map_err(|e| {
        ApiError::new("invalid_formula", format!("`{field}`: {e}"))
            .with_detail(json!({"field": field, "position": e.position, "expected": e.expected, "found": e.found}))
    })
}

async fn equivalent(body: Result<Json<EquivalentRequest>, JsonRejection>) -> ApiResult<Value> {
    let Json(body) = body?;
    let f = parse_formula("f", &body.f)?;
    let g = parse_formula("g", &body.g)?;
    let bound = body.bound.unwrap_or_default();
    if bound.max_prefix > MAX_API_BOUND || bound.max_loop > MAX_API_BOUND {
        return Err(ApiError::new("invalid_request", format!("bound components are limited to {MAX_API_BOUND}")));
    }
    let verdict = blocking(move || {
        ltl::equivalent(&f, &g, bound).map_err(|e| match e {
            EquivError::AlphabetTooLarge { size, cap } => {
                ApiError::new("alphabet_too_large", e.to_string()).with_detail(json!({"atoms": size, "cap": cap}))
            }
            other => ApiError::new("invalid_request", other.to_string()),
        })
    })
    .await?;
    let mut reply = serde_json::to_value(&verdict).map_err(|e| ApiError::new("internal", e.to_string()))?;
    reply["bound"] = json!(bound);
    Ok(Json(reply))
}

async fn not_found(request: Request) -> ApiError {
    ApiError::new("not_found", format!("no route for {} {}", request.method(), request.uri().path()))
}

async fn require_token(State(app): State<AppState>, request: Request, next: Next) -> Response {
    if let Some(secret) = &app.secret {
        let presented = request.headers().get(TOKEN_HEADER).and_then(|v| v.to_str().ok());
        if request.uri().path() != "/api/health" && presented != Some(secret.as_ref()) {
            return ApiError::new("unauthorized", format!("missing or wrong {TOKEN_HEADER} header")).into_response();
        }
    }
    next.run(request).await
}

/// The API router; non-API paths are served from `static_dir` when given.
pub fn router(app: AppState, static_dir: Option<&FsPath>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/translate", post(translate))
        .route("/api/sessions/{id}/subtranslations", post(add_sub_translation))
        .route("/api/sessions/{id}/subtranslations/{hash}", put(edit_sub_translation).delete(delete_sub_translation))
        .route("/api/sessions/{id}/select", post(select))
        .route("/api/sessions/{id}/approve", post(approve))
        .route("/api/sessions/{id}/settings", put(update_settings))
        .route("/api/templates", get(templates))
        .route("/api/backends", get(backends))
        .route("/api/equivalent", post(equivalent))
        .route_layer(middleware::from_fn_with_state(app.clone(), require_token))
        .with_state(app);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(not_found),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_session_code_is_documented() {
        let samples = [
            SessionError::EmptyInput,
            SessionError::EmptyFragment,
            SessionError::DuplicateFragment(String::new()),
            SessionError::UnknownFragment(String::new()),
            SessionError::StaleResult,
            SessionError::NoResult,
            SessionError::BadIndex { index: 0, len: 0 },
            SessionError::NothingToApprove,
            SessionError::Approved,
            SessionError::InvalidSettings(String::new()),
            SessionError::UnknownTemplate(String::new()),
            SessionError::Backend(BackendError::UnknownBackend(String::new())),
            SessionError::Backend(BackendError::Auth { status: 401 }),
            SessionError::Backend(BackendError::RateLimited { retry_after: None }),
            SessionError::Backend(BackendError::Timeout),
            SessionError::Backend(BackendError::NoRuleMatched),
            SessionError::Backend(BackendError::Network(String::new())),
            SessionError::NoCandidate(String::new()),
            SessionError::NotFound(String::new()),
            SessionError::Corrupt(String::new()),
            SessionError::Storage(String::new()),
        ];
        for e in samples {
            assert!(ERROR_CODES.contains(&e.code()), "{}", e.code());
        }
    }

    #[test]
    fn statuses() {
        assert_eq!(ApiError::new("session_not_found", "").status(), StatusCode::NOT_FOUND);
        assert_eq!(ApiError::new("duplicate_fragment", "").status(), StatusCode::CONFLICT);
        assert_eq!(ApiError::new("invalid_formula", "").status(), StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(ApiError::new("backend_timeout", "").status(), StatusCode::GATEWAY_TIMEOUT);
    }
}
