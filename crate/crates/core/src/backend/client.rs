use std::sync::{Arc, OnceLock};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::wire::*;
use super::{BackendError, HttpTransport, Route, StubBackend, StubScript, Transport};

/// Exponential backoff for retryable failures: `base`, `2·base`, `4·base`, …
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy {
            max_retries: 0,
            base_delay: Duration::ZERO,
        }
    }

    /// Retry budget without sleeping, for tests and stub runs.
    pub fn immediate(max_retries: u32) -> Self {
        RetryPolicy {
            max_retries,
            base_delay: Duration::ZERO,
        }
    }

    pub fn delay(&self, retry: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << retry.min(16))
    }
}

#[derive(Clone)]
pub struct BackendClient {
    transport: Arc<dyn Transport>,
    retry: RetryPolicy,
    info: Arc<OnceLock<BackendInfo>>,
}

impl std::fmt::Debug for BackendClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BackendClient").field("retry", &self.retry).finish_non_exhaustive()
    }
}

impl BackendClient {
    pub fn new(transport: Arc<dyn Transport>) -> Self {
        BackendClient {
            transport,
            retry: RetryPolicy::default(),
            info: Arc::new(OnceLock::new()),
        }
    }

    pub fn http(base_url: &str) -> Result<Self, BackendError> {
        Ok(Self::new(Arc::new(HttpTransport::new(base_url)?)))
    }

    pub fn stub(script: StubScript) -> Self {
        Self::new(Arc::new(StubBackend::new(script))).with_retry(RetryPolicy::none())
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        self.retry
    }

    /// One logical call: the first attempt plus up to `max_retries` retries
    /// for retryable failures.
    pub fn call_raw(&self, route: Route, body: &serde_json::Value) -> Result<String, BackendError> {
        let mut retry = 0;
        loop {
            match self.transport.call(route, body) {
                Ok(raw) => return Ok(raw),
                Err(err) if err.is_retryable() && retry < self.retry.max_retries => {
                    let delay = self.retry.delay(retry);
                    log::warn!("{err}; retry {} of {} in {delay:?}", retry + 1, self.retry.max_retries);
                    std::thread::sleep(delay);
                    retry += 1;
                }
                Err(err) => return Err(err),
            }
        }
    }

    fn call_json<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        route: Route,
        req: &Req,
    ) -> Result<(Resp, String), BackendError> {
        let body = serde_json::to_value(req).map_err(|e| BackendError::bad_request(route, e.to_string()))?;
        let raw = self.call_raw(route, &body)?;
        let decoded = decode(route, &raw)?;
        Ok((decoded, raw))
    }

    pub fn probe(&self, req: &ProbeRequest) -> Result<(ProbeResponse, String), BackendError> {
        self.call_json(Route::Probe, req)
    }

    pub fn transcribe(&self, req: &TranscribeRequest) -> Result<(TranscribeResponse, String), BackendError> {
        self.call_json(Route::Transcribe, req)
    }

    /// Returns CoNLL-U text.
    pub fn parse(&self, sentences: &[String]) -> Result<String, BackendError> {
        let body = serde_json::json!({ "sentences": sentences });
        self.call_raw(Route::Parse, &body)
    }

    pub fn absa(&self, req: &AbsaRequest) -> Result<(AbsaResponse, String), BackendError> {
        self.call_json(Route::Absa, req)
    }

    /// Returns the model's raw text; validation happens client-side.
    pub fn scene(&self, req: &SceneRequest) -> Result<String, BackendError> {
        let body = serde_json::to_value(req).map_err(|e| BackendError::bad_request(Route::Scene, e.to_string()))?;
        self.call_raw(Route::Scene, &body)
    }

    /// Capability discovery; cached after the first successful call.
    pub fn info(&self) -> Result<BackendInfo, BackendError> {
        if let Some(info) = self.info.get() {
            return Ok(info.clone());
        }
        let raw = self.call_raw(Route::Info, &serde_json::Value::Null)?;
        let info: BackendInfo = decode(Route::Info, &raw)?;
        Ok(self.info.get_or_init(|| info).clone())
    }
}

fn decode<T: DeserializeOwned>(route: Route, raw: &str) -> Result<T, BackendError> {
    serde_json::from_str(raw).map_err(|e| {
        log::error!("malformed response from {route}: {e}; raw payload: {raw}");
        BackendError::contract(route, e.to_string(), raw)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    struct Flaky {
        failures: u32,
        calls: AtomicU32,
        error: BackendError,
    }

    impl Transport for Flaky {
        fn call(&self, _route: Route, _body: &serde_json::Value) -> Result<String, BackendError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err(self.error.clone())
            } else {
                Ok(r#"{"language":"en","confidence":0.9}"#.into())
            }
        }
    }

    fn transport_error() -> BackendError {
        BackendError::Transport {
            route: Route::Probe,
            message: "connection refused".into(),
        }
    }

    fn probe_req() -> ProbeRequest {
        ProbeRequest {
            video_id: "v".into(),
            audio_url_or_b64: "a".into(),
            window_s: 30.0,
        }
    }

    #[test]
    fn backoff_doubles_from_base() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay(0), Duration::from_secs(1));
        assert_eq!(p.delay(1), Duration::from_secs(2));
        assert_eq!(p.delay(2), Duration::from_secs(4));
    }

    #[test]
    fn three_retries_then_success() {
        let flaky = Arc::new(Flaky {
            failures: 3,
            calls: AtomicU32::new(0),
            error: transport_error(),
        });
        let client = BackendClient::new(flaky.clone()).with_retry(RetryPolicy::immediate(3));
        let (resp, _) = client.probe(&probe_req()).unwrap();
        assert_eq!(resp.language, "en");
        assert_eq!(flaky.calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn gives_up_after_budget() {
        let flaky = Arc::new(Flaky {
            failures: 10,
            calls: AtomicU32::new(0),
            error: transport_error(),
        });
        let client = BackendClient::new(flaky.clone()).with_retry(RetryPolicy::immediate(3));
        assert!(matches!(client.probe(&probe_req()), Err(BackendError::Transport { .. })));
        assert_eq!(flaky.calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let flaky = Arc::new(Flaky {
            failures: 10,
            calls: AtomicU32::new(0),
            error: BackendError::bad_request(Route::Probe, "nope"),
        });
        let client = BackendClient::new(flaky.clone()).with_retry(RetryPolicy::immediate(3));
        assert!(client.probe(&probe_req()).is_err());
        assert_eq!(flaky.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn malformed_body_is_a_contract_violation_carrying_the_raw_payload() {
        struct Garbage;
        impl Transport for Garbage {
            fn call(&self, _: Route, _: &serde_json::Value) -> Result<String, BackendError> {
                Ok("<html>oops</html>".into())
            }
        }
        let client = BackendClient::new(Arc::new(Garbage));
        match client.probe(&probe_req()) {
            Err(BackendError::Contract { raw, .. }) => assert_eq!(raw, "<html>oops</html>"),
            other => panic!("expected contract violation, got {other:?}"),
        }
    }
}
