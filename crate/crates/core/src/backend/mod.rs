//! The model-service contract.
//!
//! Every model call (speech recognition, dependency parsing, aspect sentiment,
//! scene labeling) goes through one base URL with fixed route names. A
//! [`Transport`] moves raw request/response bodies; [`BackendClient`] adds the
//! retry policy and typed decoding on top. Response bodies are handed back
//! verbatim next to the decoded value so callers can persist them for audit.

mod client;
pub mod conformance;
mod http;
pub mod server;
pub mod stub;
pub mod wire;

use std::fmt;

use thiserror::Error;

pub use client::{BackendClient, RetryPolicy};
pub use http::HttpTransport;
pub use server::BackendServer;
pub use stub::{StubBackend, StubScript};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    Probe,
    Transcribe,
    Parse,
    Absa,
    Scene,
    Info,
}

impl Route {
    pub const ALL: [Route; 6] = [
        Route::Probe,
        Route::Transcribe,
        Route::Parse,
        Route::Absa,
        Route::Scene,
        Route::Info,
    ];

    pub fn path(self) -> &'static str {
        match self {
            Route::Probe => "/probe",
            Route::Transcribe => "/transcribe",
            Route::Parse => "/parse",
            Route::Absa => "/absa",
            Route::Scene => "/scene",
            Route::Info => "/info",
        }
    }

    pub fn from_path(path: &str) -> Option<Route> {
        Route::ALL.into_iter().find(|r| r.path() == path)
    }

    /// `/info` is the only GET route.
    pub fn is_get(self) -> bool {
        self == Route::Info
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.path())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("transport error on {route}: {message}")]
    Transport { route: Route, message: String },

    #[error("{route} answered HTTP {status}: {body}")]
    Status { route: Route, status: u16, body: String },

    #[error("contract violation on {route}: {message}")]
    Contract {
        route: Route,
        message: String,
        raw: String,
    },
}

impl BackendError {
    pub fn contract(route: Route, message: impl Into<String>, raw: impl Into<String>) -> Self {
        BackendError::Contract {
            route,
            message: message.into(),
            raw: raw.into(),
        }
    }

    pub fn bad_request(route: Route, message: impl Into<String>) -> Self {
        BackendError::Status {
            route,
            status: 400,
            body: message.into(),
        }
    }

    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport { .. } => true,
            BackendError::Status { status, .. } => matches!(status, 429 | 500 | 502 | 503 | 504),
            BackendError::Contract { .. } => false,
        }
    }

    pub fn is_payload_too_large(&self) -> bool {
        matches!(self, BackendError::Status { status: 413, .. })
    }
}

/// Moves one raw request body to a route and returns the raw response body.
/// For [`Route::Info`] the request body is ignored.
pub trait Transport: Send + Sync {
    fn call(&self, route: Route, body: &serde_json::Value) -> Result<String, BackendError>;
}
