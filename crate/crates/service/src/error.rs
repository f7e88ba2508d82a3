use axum::Json;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use serde::Serialize;
use serde_json::Value;

use adaptutor_core::assessment::AssessmentError;
use adaptutor_core::session::{RecordError, SessionError};

/// Error body returned by every route.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                detail: Value::Null,
            },
        }
    }

    pub fn with_detail(mut self, detail: Value) -> ApiError {
        self.body.detail = detail;
        self
    }

    pub fn unauthorized() -> ApiError {
        ApiError::new(StatusCode::UNAUTHORIZED, "Unauthorized", "missing or invalid bearer token")
    }

    pub fn not_found(what: &str, id: &str) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, "NotFound", format!("unknown {what} `{id}`"))
    }

    pub fn invalid(code: &str, message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }
}

impl From<SessionError> for ApiError {
    fn from(err: SessionError) -> ApiError {
        use StatusCode as S;
        let message = err.to_string();
        let (status, code) = match &err {
            SessionError::InvalidState { .. } => (S::CONFLICT, "InvalidState"),
            SessionError::UnknownPack { .. } => (S::INTERNAL_SERVER_ERROR, "UnknownPack"),
            SessionError::UnknownConcept(_) => (S::NOT_FOUND, "UnknownConcept"),
            SessionError::UnknownTest(_) => (S::NOT_FOUND, "UnknownTest"),
            SessionError::UnknownQuestion(_) => (S::NOT_FOUND, "UnknownQuestion"),
            SessionError::UnknownMessage(_) => (S::NOT_FOUND, "UnknownMessage"),
            SessionError::HintBudgetExhausted => (S::CONFLICT, "HintBudgetExhausted"),
            SessionError::NoMoreHints(_) => (S::CONFLICT, "NoMoreHints"),
            SessionError::Profiler(e) => (S::UNPROCESSABLE_ENTITY, profiler_code(e)),
            SessionError::Assessment(e) => assessment_status(e),
            SessionError::Modeler(_) => (S::INTERNAL_SERVER_ERROR, "ModelerOutOfRange"),
        };
        let detail = match &err {
            SessionError::InvalidState { expected, actual } => serde_json::json!({
                "expected": expected,
                "actual": actual,
            }),
            SessionError::Assessment(AssessmentError::BankExhausted { concept, detail }) => {
                serde_json::json!({ "concept": concept, "detail": detail })
            }
            _ => Value::Null,
        };
        ApiError::new(status, code, message).with_detail(detail)
    }
}

fn profiler_code(err: &adaptutor_core::profiler::ProfilerError) -> &'static str {
    use adaptutor_core::profiler::ProfilerError as P;
    match err {
        P::MissingResponse(_) => "MissingResponse",
        P::OutOfRangeResponse { .. } => "OutOfRangeResponse",
        _ => "InvalidProfile",
    }
}

fn assessment_status(err: &AssessmentError) -> (StatusCode, &'static str) {
    use AssessmentError as A;
    match err {
        A::UnansweredQuestion(_) => (StatusCode::UNPROCESSABLE_ENTITY, "UnansweredQuestion"),
        A::UnknownChoice { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "UnknownChoice"),
        A::UnknownQuestion(_) => (StatusCode::UNPROCESSABLE_ENTITY, "UnknownQuestion"),
        A::TooManyHints { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "TooManyHints"),
        A::BankExhausted { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "BankExhausted"),
        A::InvalidSpec { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "InvalidSpec"),
        A::OutOfRange(_) => (StatusCode::INTERNAL_SERVER_ERROR, "OutOfRange"),
    }
}

impl From<RecordError> for ApiError {
    fn from(err: RecordError) -> ApiError {
        match err {
            RecordError::InvalidLearnerId(id) => {
                ApiError::invalid("InvalidLearnerId", format!("invalid learner id `{id}`"))
            }
            other => ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "RecordFailure",
                other.to_string(),
            ),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
