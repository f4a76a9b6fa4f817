use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use netmine_core::io::IoError;
use netmine_core::layout::LayoutError;
use netmine_core::session::SessionError;
use netmine_core::significance::NullModelError;
use netmine_core::stats::StatsError;
use netmine_core::{ClusterError, GraphError};
use serde_json::{json, Value};

use crate::json_response;

/// Client-visible failure, rendered as `{code, message, detail}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn unknown_dataset(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_dataset",
            format!("no dataset `{id}`"),
        )
        .with_detail(json!({ "dataset": id }))
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_session",
            format!("no session `{id}`"),
        )
        .with_detail(json!({ "session": id }))
    }

    pub fn unknown_job(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_job",
            format!("no job `{id}`"),
        )
        .with_detail(json!({ "job": id }))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    pub fn body(&self) -> Value {
        json!({
            "code": self.code,
            "message": self.message,
            "detail": self.detail,
        })
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json_response(self.status, &self.body())
    }
}

impl From<ClusterError> for ApiError {
    fn from(e: ClusterError) -> Self {
        let message = e.to_string();
        match e {
            ClusterError::UnknownCluster(c) => Self::bad_request(message)
                .code("unknown_cluster")
                .with_detail(json!({ "cluster": c })),
            ClusterError::BadTarget { target, k } => Self::bad_request(message)
                .code("bad_target")
                .with_detail(json!({ "target": target, "k": k })),
            ClusterError::EmptyGraph => Self::bad_request(message).code("empty_graph"),
            ClusterError::Graph(g) => g.into(),
            _ => Self::bad_request(message).code("invalid_partition"),
        }
    }
}

impl From<GraphError> for ApiError {
    fn from(e: GraphError) -> Self {
        Self::bad_request(e.to_string()).code("graph_error")
    }
}

impl From<StatsError> for ApiError {
    fn from(e: StatsError) -> Self {
        let message = e.to_string();
        let (code, detail) = match &e {
            StatsError::UnknownAttribute(a) => ("unknown_attribute", json!({ "attribute": a })),
            StatsError::UnknownCategory {
                attribute,
                category,
            } => (
                "unknown_category",
                json!({ "attribute": attribute, "category": category }),
            ),
            StatsError::NotCategorical(a) => ("not_categorical", json!({ "attribute": a })),
            StatsError::NotIntegerAttribute(a) => ("not_integer", json!({ "attribute": a })),
            StatsError::DegenerateGlobal {
                attribute,
                categories,
            } => (
                "degenerate_global",
                json!({ "attribute": attribute, "categories": categories }),
            ),
            StatsError::UnlabeledCluster(c) => ("unlabeled_cluster", json!({ "cluster": c })),
            StatsError::UnknownCluster(c) => ("unknown_cluster", json!({ "cluster": c })),
        };
        Self::bad_request(message).code(code).with_detail(detail)
    }
}

impl From<NullModelError> for ApiError {
    fn from(e: NullModelError) -> Self {
        match e {
            NullModelError::Cluster(c) => c.into(),
            other => Self::bad_request(other.to_string()).code("null_model"),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Cluster(e) => e.into(),
            SessionError::Null(e) => e.into(),
            SessionError::Stats(e) => e.into(),
            SessionError::Layout(e) => {
                let message = e.to_string();
                match e {
                    LayoutError::UnknownCategory(c) => Self::bad_request(message)
                        .code("unknown_category")
                        .with_detail(json!({ "category": c })),
                    LayoutError::UnknownCluster(c) => Self::bad_request(message)
                        .code("unknown_cluster")
                        .with_detail(json!({ "cluster": c })),
                    LayoutError::InvalidAlpha(_) => {
                        Self::bad_request(message).code("invalid_alpha")
                    }
                    _ => Self::bad_request(message).code("layout"),
                }
            }
            SessionError::NothingToUndo => {
                Self::new(StatusCode::CONFLICT, "nothing_to_undo", "nothing to undo")
            }
            SessionError::NothingToRedo => {
                Self::new(StatusCode::CONFLICT, "nothing_to_redo", "nothing to redo")
            }
            SessionError::NoOverlay => Self::new(StatusCode::CONFLICT, "no_overlay", e.to_string()),
        }
    }
}

impl From<IoError> for ApiError {
    fn from(e: IoError) -> Self {
        let message = e.to_string();
        match e {
            IoError::Parse { file, line, .. } => Self::bad_request(message)
                .code("parse_error")
                .with_detail(json!({ "file": file, "line": line })),
            IoError::Graph { file, line, .. } => Self::bad_request(message)
                .code("graph_error")
                .with_detail(json!({ "file": file, "line": line })),
            IoError::SchemaMismatch { file, .. } => Self::bad_request(message)
                .code("schema_mismatch")
                .with_detail(json!({ "file": file })),
            IoError::Io { path, .. } => Self::bad_request(message)
                .code("io_error")
                .with_detail(json!({ "path": path })),
            IoError::MissingArtifact(a) => {
                Self::new(StatusCode::NOT_FOUND, "missing_artifact", message)
                    .with_detail(json!({ "artifact": a }))
            }
            IoError::Cluster(c) => c.into(),
            _ => Self::bad_request(message),
        }
    }
}

impl ApiError {
    fn code(mut self, code: &'static str) -> Self {
        self.code = code;
        self
    }
}
