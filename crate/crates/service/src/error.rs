use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

/// The body of every non-2xx response.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDoc {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_id: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub doc: ErrorDoc,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            doc: ErrorDoc {
                code: code.into(),
                message: message.into(),
                node_id: None,
            },
        }
    }

    pub fn at_node(mut self, node_id: Option<&str>) -> Self {
        self.doc.node_id = node_id.map(str::to_string);
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", message)
    }

    pub fn running() -> Self {
        Self::new(StatusCode::CONFLICT, "TREE_RUNNING", "a tree is executing")
    }

    pub fn not_running() -> Self {
        Self::new(StatusCode::CONFLICT, "NOT_RUNNING", "no tree is executing")
    }

    pub fn no_tree() -> Self {
        Self::new(StatusCode::NOT_FOUND, "NO_TREE", "no tree has been loaded")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.doc)).into_response()
    }
}
