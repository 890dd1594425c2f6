use std::io;
use std::thread;
use std::time::{Duration, Instant};

use serde_json::Value;

use super::{build_request, ObservationTable, ProbeError, ProbeResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportError(pub String);

/// Sends one JSON request body and reports the HTTP status.
pub trait ProbeClient {
    fn post_json(&self, url: &str, body: &Value) -> Result<u16, TransportError>;
}

/// Blocking HTTP/1.1 client; an optional header value is forwarded as
/// `Authorization`.
pub struct HttpClient {
    agent: ureq::Agent,
    auth: Option<String>,
}

impl HttpClient {
    pub fn new(auth: Option<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(10)))
            .build();
        HttpClient { agent: ureq::Agent::new_with_config(config), auth }
    }
}

fn classify(e: ureq::Error) -> TransportError {
    let kind = match &e {
        ureq::Error::ConnectionFailed | ureq::Error::HostNotFound => "connect".to_string(),
        ureq::Error::Io(io) if matches!(io.kind(), io::ErrorKind::ConnectionRefused | io::ErrorKind::ConnectionReset) => {
            "connect".to_string()
        }
        ureq::Error::Timeout(_) => "timeout".to_string(),
        other => format!("transport: {}", other),
    };
    TransportError(kind)
}

impl ProbeClient for HttpClient {
    fn post_json(&self, url: &str, body: &Value) -> Result<u16, TransportError> {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(auth) = &self.auth {
            req = req.header("Authorization", auth);
        }
        let resp = req.send(body.to_string()).map_err(classify)?;
        Ok(resp.status().as_u16())
    }
}

/// Spaces request starts at least `1 / rate` seconds apart.
pub struct RateLimiter {
    interval: Duration,
    last: Option<Instant>,
}

impl RateLimiter {
    pub fn per_second(rate: f64) -> Self {
        let interval = if rate > 0.0 { Duration::from_secs_f64(1.0 / rate) } else { Duration::ZERO };
        RateLimiter { interval, last: None }
    }

    pub fn wait(&mut self) {
        if let Some(last) = self.last {
            let next = last + self.interval;
            let now = Instant::now();
            if next > now {
                thread::sleep(next - now);
            }
        }
        self.last = Some(Instant::now());
    }
}

/// Everything needed to probe one endpoint.
pub struct Prober<'a> {
    pub client: &'a dyn ProbeClient,
    pub url: String,
    pub base: Value,
    pub limiter: RateLimiter,
}

impl<'a> Prober<'a> {
    pub fn new(client: &'a dyn ProbeClient, url: impl Into<String>, base: Value, rate: f64) -> Self {
        Prober { client, url: url.into(), base, limiter: RateLimiter::per_second(rate) }
    }
}

/// Sends every row sequentially and records its outcome.
pub fn run_probe(mut table: ObservationTable, prober: &mut Prober<'_>) -> Result<ObservationTable, ProbeError> {
    for i in 0..table.rows.len() {
        let states = table.row_states(&table.rows[i]);
        let body = build_request(&prober.base, &states)?;
        prober.limiter.wait();
        let result = match prober.client.post_json(&prober.url, &body) {
            Ok(status) => ProbeResult::from_status(status),
            Err(TransportError(kind)) => ProbeResult::Error(kind),
        };
        log::debug!("probe {} -> {}", body, result);
        table.rows[i].result = Some(result);
    }
    Ok(table)
}
