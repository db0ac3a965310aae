use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use certsched_core::explain::ExplainError;
use certsched_core::scenario::ScenarioError;
use certsched_core::verify::VerifyError;

/// JSON error body returned by every failing route.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                field: None,
            },
        }
    }

    pub fn with_field(mut self, field: impl Into<String>) -> Self {
        self.body.field = Some(field.into());
        self
    }

    pub fn session_not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "session_not_found", format!("no session `{id}`"))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<ScenarioError> for ApiError {
    fn from(e: ScenarioError) -> Self {
        let field = e.field().map(str::to_string);
        let code = match e {
            ScenarioError::Parse(_) => "malformed_document",
            _ => "invalid_scenario",
        };
        let err = ApiError::new(StatusCode::BAD_REQUEST, code, e.to_string());
        match field {
            Some(f) => err.with_field(f),
            None => err,
        }
    }
}

impl From<ExplainError> for ApiError {
    fn from(e: ExplainError) -> Self {
        use ExplainError::*;
        let (status, code) = match &e {
            UnknownOrder(_) => (StatusCode::NOT_FOUND, "order_not_found"),
            AlreadyScheduled(_) => (StatusCode::CONFLICT, "already_scheduled"),
            NotScheduled(_) => (StatusCode::CONFLICT, "not_scheduled"),
            InvalidAtom { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_atom"),
            NoCorrectionFound(_) => (StatusCode::UNPROCESSABLE_ENTITY, "no_correction_found"),
            Scenario(ScenarioError::Validation { .. }) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_atom"),
            ModelFeasible | Solver(_) | Model(_) | Scenario(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        let field = match &e {
            Scenario(s) => s.field().map(str::to_string),
            _ => None,
        };
        let err = ApiError::new(status, code, e.to_string());
        match field {
            Some(f) => err.with_field(f),
            None => err,
        }
    }
}

impl From<VerifyError> for ApiError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Explain(e) => e.into(),
            other => ApiError::internal(other.to_string()),
        }
    }
}
