use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use sld_core::{ErrorKind, SldError};

/// Error response body: `{"error": {"code", "message", "path"?}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub path: Option<String>,
}

#[derive(Serialize)]
struct Body<'a> {
    error: Inner<'a>,
}

#[derive(Serialize)]
struct Inner<'a> {
    code: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<&'a str>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            path: None,
        }
    }

    pub fn with_path(mut self, path: impl Into<String>) -> Self {
        self.path = Some(path.into());
        self
    }

    pub fn validation(message: impl Into<String>, path: Option<String>) -> Self {
        ApiError {
            path,
            ..ApiError::new(StatusCode::BAD_REQUEST, "validation", message)
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    /// Maps a failure while resolving or running a job. Everything the
    /// client can fix is a 400; numeric failures are 422.
    pub fn from_job(e: SldError) -> Self {
        let message = e.to_string();
        let path = e.pointer().map(str::to_string);
        let (status, code) = match e.kind() {
            ErrorKind::Validation => (StatusCode::BAD_REQUEST, "validation"),
            ErrorKind::NotFound => (StatusCode::BAD_REQUEST, "not_found"),
            ErrorKind::OutOfRange => (StatusCode::BAD_REQUEST, "out_of_range"),
            ErrorKind::Numeric => (StatusCode::UNPROCESSABLE_ENTITY, "numeric"),
            ErrorKind::Io => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError {
            status,
            code,
            message,
            path,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            error: Inner {
                code: self.code,
                message: &self.message,
                path: self.path.as_deref(),
            },
        };
        (self.status, Json(body)).into_response()
    }
}
