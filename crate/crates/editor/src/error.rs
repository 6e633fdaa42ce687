use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use gridprobe::level::{Site, Violation};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::session::Mode;

/// One reason an edit was refused, located where possible.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Detail {
    pub site: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub col: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    pub message: String,
}

impl Detail {
    pub fn at_cell(col: usize, row: usize, message: impl Into<String>) -> Self {
        Self {
            site: format!("cell ({col}, {row})"),
            col: Some(col),
            row: Some(row),
            message: message.into(),
        }
    }
}

impl From<&Violation> for Detail {
    fn from(v: &Violation) -> Self {
        let (col, row) = match v.site {
            Site::Cell(p) => (Some(p.col), Some(p.row)),
            _ => (None, None),
        };
        Self {
            site: v.site.to_string(),
            col,
            row,
            message: v.kind.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("no session {0:?}")]
    NoSession(String),
    #[error("this endpoint needs a {expected} session, {id:?} is a {actual} session")]
    WrongMode {
        id: String,
        expected: Mode,
        actual: Mode,
    },
    #[error("{0}")]
    BadRequest(String),
    #[error("{message}")]
    Rejected {
        message: String,
        details: Vec<Detail>,
    },
}

impl ApiError {
    pub fn rejected(message: impl Into<String>, details: Vec<Detail>) -> Self {
        Self::Rejected {
            message: message.into(),
            details,
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            Self::NoSession(_) => StatusCode::NOT_FOUND,
            Self::WrongMode { .. } => StatusCode::CONFLICT,
            Self::BadRequest(_) => StatusCode::BAD_REQUEST,
            Self::Rejected { .. } => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::NoSession(_) => "no_session",
            Self::WrongMode { .. } => "wrong_mode",
            Self::BadRequest(_) => "bad_request",
            Self::Rejected { .. } => "rejected",
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let details = match &self {
            Self::Rejected { details, .. } => details.clone(),
            _ => Vec::new(),
        };
        let body = json!({ "error": self.kind(), "message": self.to_string(), "details": details });
        (self.status(), Json(body)).into_response()
    }
}
