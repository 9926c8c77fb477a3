use std::time::Duration;

use super::{BackendError, Route, Transport};

/// Blocking HTTP transport against a model server's base URL.
#[derive(Debug, Clone)]
pub struct HttpTransport {
    base: String,
    agent: ureq::Agent,
}

const BODY_LIMIT: u64 = 64 * 1024 * 1024;

impl HttpTransport {
    pub fn new(base_url: &str) -> Result<Self, BackendError> {
        Self::with_timeout(base_url, Duration::from_secs(300))
    }

    pub fn with_timeout(base_url: &str, timeout: Duration) -> Result<Self, BackendError> {
        let base = base_url.trim_end_matches('/').to_string();
        if !(base.starts_with("http://") || base.starts_with("https://")) || base.len() <= "https://".len() {
            return Err(BackendError::Transport {
                route: Route::Info,
                message: format!("not an http(s) base URL: {base_url:?}"),
            });
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpTransport { base, agent })
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }
}

impl Transport for HttpTransport {
    fn call(&self, route: Route, body: &serde_json::Value) -> Result<String, BackendError> {
        let url = format!("{}{}", self.base, route.path());
        let transport_err = |e: ureq::Error| BackendError::Transport {
            route,
            message: e.to_string(),
        };
        let mut resp = if route.is_get() {
            self.agent.get(&url).call().map_err(transport_err)?
        } else {
            self.agent.post(&url).send_json(body).map_err(transport_err)?
        };
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .with_config()
            .limit(BODY_LIMIT)
            .read_to_string()
            .map_err(transport_err)?;
        if (200..300).contains(&status) {
            Ok(text)
        } else {
            Err(BackendError::Status {
                route,
                status,
                body: text,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_http_urls() {
        assert!(HttpTransport::new("ftp://x").is_err());
        assert!(HttpTransport::new("localhost:8080").is_err());
        assert!(HttpTransport::new("http://").is_err());
        assert_eq!(HttpTransport::new("http://127.0.0.1:9/").unwrap().base_url(), "http://127.0.0.1:9");
    }

    #[test]
    fn unreachable_server_is_a_retryable_transport_error() {
        // port 9 (discard) is essentially never bound in the sandbox
        let t = HttpTransport::with_timeout("http://127.0.0.1:9", Duration::from_secs(2)).unwrap();
        let err = t.call(Route::Info, &serde_json::Value::Null).unwrap_err();
        assert!(err.is_retryable(), "{err:?}");
    }
}
