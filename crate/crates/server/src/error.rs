use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use novobo_core::agents::AgentError;
use novobo_core::llm::ProviderErrorKind;
use novobo_core::session::store::StoreError;
use novobo_core::session::SessionError;
use serde::Serialize;
use serde_json::Value;

/// Error body shared by every route: `{code, message, details?}`.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                details: None,
            },
        }
    }

    fn with_details(mut self, details: impl Serialize) -> Self {
        self.body.details = serde_json::to_value(details).ok();
        self
    }

    pub fn not_found(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "ParseError", r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "ParseError", r.body_text())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        tracing::error!(error = %e, "session store failure");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "StorageError", e.to_string())
    }
}

fn agent_status(e: &AgentError) -> StatusCode {
    match e {
        AgentError::Provider(p) if p.kind == ProviderErrorKind::Timeout => StatusCode::GATEWAY_TIMEOUT,
        AgentError::Precondition(_) => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_GATEWAY,
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let code = e.code();
        let message = e.to_string();
        match &e {
            SessionError::WrongStage { expected, actual } => {
                ApiError::new(StatusCode::CONFLICT, code, message)
                    .with_details(serde_json::json!({"expected": expected, "actual": actual}))
            }
            SessionError::IncompleteRatings(coverage) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message).with_details(coverage)
            }
            SessionError::InvalidRecording(v) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message).with_details(v)
            }
            SessionError::InvalidScenario(_)
            | SessionError::InvalidStars { .. }
            | SessionError::EmptyComment { .. }
            | SessionError::EmptyExplanation => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message),
            SessionError::NoGestureNeeded { .. } => ApiError::new(StatusCode::OK, code, message),
            SessionError::Agent(a) => {
                if agent_status(a) == StatusCode::INTERNAL_SERVER_ERROR {
                    tracing::error!(error = %a, "engine precondition failed");
                } else {
                    tracing::warn!(error = %a, "provider call failed");
                }
                ApiError::new(agent_status(a), code, message)
            }
        }
    }
}
