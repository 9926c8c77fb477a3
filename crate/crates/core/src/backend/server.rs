//! Serves any [`Transport`] over HTTP under the contract's route names. Used
//! to expose the stub to out-of-process clients and to exercise the HTTP
//! client end to end.

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use super::wire::schema_hint;
use super::{BackendError, Route, Transport};

pub struct BackendServer {
    server: Arc<tiny_http::Server>,
    addr: SocketAddr,
    worker: Option<JoinHandle<()>>,
}

impl BackendServer {
    /// Bind `addr` (use port 0 for an ephemeral port) and serve in a
    /// background thread until dropped.
    pub fn spawn(transport: Arc<dyn Transport>, addr: &str) -> std::io::Result<Self> {
        let server = tiny_http::Server::http(addr).map_err(std::io::Error::other)?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("server is not bound to an IP socket"))?;
        let server = Arc::new(server);
        let srv = server.clone();
        let worker = std::thread::spawn(move || {
            for request in srv.incoming_requests() {
                let transport = transport.clone();
                std::thread::spawn(move || handle(transport.as_ref(), request));
            }
        });
        Ok(BackendServer {
            server,
            addr,
            worker: Some(worker),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Block the calling thread until the server stops.
    pub fn join(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for BackendServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn handle(transport: &dyn Transport, mut request: tiny_http::Request) {
    let path = request.url().split('?').next().unwrap_or("").to_string();
    let (status, content_type, body) = match Route::from_path(&path) {
        None => (404, "application/json", error_body(&format!("no route {path}"), None)),
        Some(route) => {
            let method_ok = if route.is_get() {
                *request.method() == tiny_http::Method::Get
            } else {
                *request.method() == tiny_http::Method::Post
            };
            if !method_ok {
                (405, "application/json", error_body("method not allowed", Some(route)))
            } else {
                respond(transport, route, &mut request)
            }
        }
    };
    let header = tiny_http::Header::from_bytes("Content-Type", content_type).expect("static header");
    let response = tiny_http::Response::from_string(body)
        .with_status_code(status)
        .with_header(header);
    if let Err(e) = request.respond(response) {
        log::warn!("failed to send response for {path}: {e}");
    }
}

fn respond(transport: &dyn Transport, route: Route, request: &mut tiny_http::Request) -> (u16, &'static str, String) {
    let body = if route.is_get() {
        serde_json::Value::Null
    } else {
        let mut text = String::new();
        if let Err(e) = request.as_reader().read_to_string(&mut text) {
            return (400, "application/json", error_body(&format!("unreadable body: {e}"), Some(route)));
        }
        match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => return (400, "application/json", error_body(&format!("invalid JSON: {e}"), Some(route))),
        }
    };
    match transport.call(route, &body) {
        Ok(raw) => {
            let ct = match route {
                Route::Parse | Route::Scene => "text/plain; charset=utf-8",
                _ => "application/json",
            };
            (200, ct, raw)
        }
        Err(BackendError::Status { status, body, .. }) => (status, "application/json", error_body(&body, Some(route))),
        Err(e @ BackendError::Contract { .. }) => (500, "application/json", error_body(&e.to_string(), Some(route))),
        Err(e @ BackendError::Transport { .. }) => (502, "application/json", error_body(&e.to_string(), Some(route))),
    }
}

fn error_body(message: &str, route: Option<Route>) -> String {
    serde_json::json!({
        "error": message,
        "schema": route.map(schema_hint),
    })
    .to_string()
}
