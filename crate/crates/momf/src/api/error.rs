use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value as Json_};
use uuid::Uuid;

use crate::campaign::CampaignError;
use crate::datastore::StoreError;

/// The only failure shape a handler returns.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub path: Option<String>,
    pub details: Option<Json_>,
    pub incident: Option<Uuid>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, code: code.to_string(), message: message.into(), path: None, details: None, incident: None }
    }

    pub fn unauthorized() -> Self {
        ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or unknown bearer token")
    }

    pub fn forbidden(needed: &str) -> Self {
        ApiError::new(StatusCode::FORBIDDEN, "forbidden", format!("this route needs the {needed} role"))
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn at(mut self, path: impl Into<String>) -> Self {
        self.path = Some(path.into());
        self
    }

    /// A 500 carrying only an opaque incident id; the cause goes to the log.
    pub fn internal(cause: &dyn std::fmt::Display) -> Self {
        let incident = Uuid::new_v4();
        tracing::error!(%incident, "internal failure: {cause}");
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal".into(),
            message: "internal error".into(),
            path: None,
            details: None,
            incident: Some(incident),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"status": self.status.as_u16(), "code": self.code, "message": self.message});
        if let Some(p) = self.path {
            body["path"] = json!(p);
        }
        if let Some(d) = self.details {
            body["details"] = d;
        }
        if let Some(i) = self.incident {
            body["incident"] = json!(i.to_string());
        }
        (self.status, Json(json!({ "error": body }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match &e {
            StoreError::TableMissing(_) | StoreError::FormMissing(_) => ApiError::not_found(e.to_string()),
            StoreError::Io(_) | StoreError::Injected => ApiError::internal(&e),
            StoreError::Rejected(v) => {
                let mut err = ApiError::bad_request(e.code(), e.to_string());
                err.details = Some(serde_json::to_value(v).expect("violations serialize"));
                err.path = v.first().map(|v| format!("record.{}", v.field));
                err
            }
            StoreError::MalformedFilter(f) => ApiError::bad_request(e.code(), e.to_string()).at(if f.path.is_empty() {
                "filter".to_string()
            } else {
                format!("filter.{}", f.path)
            }),
            StoreError::UnknownColumn(c) => ApiError::bad_request(e.code(), e.to_string()).at(c.clone()),
            _ => ApiError::bad_request(e.code(), e.to_string()),
        }
    }
}

impl From<CampaignError> for ApiError {
    fn from(e: CampaignError) -> Self {
        match e {
            CampaignError::Store(s) => s.into(),
            CampaignError::UnknownProposal(_) => ApiError::new(StatusCode::NOT_FOUND, e.code(), e.to_string()),
            CampaignError::Numeric(_) | CampaignError::Snapshot(_) => ApiError::internal(&e),
            _ => ApiError::bad_request(e.code(), e.to_string()),
        }
    }
}
