//! A deterministic HTTP service that rejects request bodies violating a
//! declared constraint set.

use std::future::Future;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::thread;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::Router;
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;
use tokio::sync::oneshot;

use crate::constraint::{evaluate_under, parse_dsl_with_catalog, Assignment, Constraint, ConstraintError, ParamPath};
use crate::oas::{load_spec, EndpointSpec, OasError};

#[derive(Debug, Error)]
pub enum MockError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("scenario file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("scenario spec: {0}")]
    Oas(#[from] OasError),
    #[error("scenario constraints: {0}")]
    Constraint(#[from] ConstraintError),
    #[error("scenario constraint '{0}' contains an unparsed atom")]
    Unparsed(String),
    #[error("failure status {0} is not an HTTP error code")]
    BadStatus(u16),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: EndpointSpec,
    pub constraints: Vec<Constraint>,
    pub failure_status: u16,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ScenarioFile {
    spec: String,
    constraints: String,
    #[serde(default = "default_failure_status")]
    failure_status: u16,
}

fn default_failure_status() -> u16 {
    422
}

fn read(path: &Path) -> Result<String, MockError> {
    std::fs::read_to_string(path).map_err(|source| MockError::Io { path: path.display().to_string(), source })
}

impl Scenario {
    pub fn new(spec: EndpointSpec, constraints: Vec<Constraint>, failure_status: u16) -> Result<Self, MockError> {
        if !(400..600).contains(&failure_status) {
            return Err(MockError::BadStatus(failure_status));
        }
        let catalog = spec.path_catalog();
        for c in &constraints {
            if c.precondition.has_unparsed() {
                return Err(MockError::Unparsed(c.to_string()));
            }
            if let Some(p) = c.paths().into_iter().find(|p| !catalog.contains(p.as_str())) {
                return Err(MockError::Constraint(ConstraintError::UnknownPath { line: 0, path: p.to_string() }));
            }
        }
        Ok(Scenario { spec, constraints, failure_status })
    }

    /// Parses spec and constraint texts; constraint paths must exist in the spec.
    pub fn from_texts(spec: &str, constraints: &str, failure_status: u16) -> Result<Self, MockError> {
        let spec = load_spec(spec)?;
        let constraints = parse_dsl_with_catalog(constraints, &spec.path_catalog())?;
        Scenario::new(spec, constraints, failure_status)
    }

    /// Loads `{"spec": .., "constraints": .., "failureStatus": ..}`; file
    /// paths are relative to the scenario file.
    pub fn load(path: &Path) -> Result<Self, MockError> {
        let file: ScenarioFile = serde_json::from_str(&read(path)?)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Scenario::from_texts(&read(&dir.join(&file.spec))?, &read(&dir.join(&file.constraints))?, file.failure_status)
    }

    pub fn endpoint_path(&self) -> &str {
        &self.spec.endpoint_path
    }
}

/// The value at `path`, descending into the first element of arrays.
/// JSON `null` counts as absent.
pub fn lookup(body: &Value, path: &ParamPath) -> Option<Value> {
    let mut cur = body;
    for seg in path.segments() {
        while let Value::Array(items) = cur {
            cur = items.first()?;
        }
        cur = cur.as_object()?.get(seg)?;
    }
    (!cur.is_null()).then(|| cur.clone())
}

/// The evaluation point a body denotes over every spec path.
pub fn body_assignment(spec: &EndpointSpec, body: &Value) -> Assignment {
    let mut a = Assignment::new();
    for p in spec.flat() {
        a.set(p.path.clone(), lookup(body, &p.path));
    }
    a
}

fn well_typed(spec: &EndpointSpec, a: &Assignment) -> bool {
    spec.flat().all(|p| match a.values.get(&p.path) {
        Some(Some(v)) => p.data_type.accepts(v),
        _ => true,
    })
}

/// Status for one raw request body.
pub fn validate_request(s: &Scenario, body: &[u8]) -> u16 {
    let Ok(body) = serde_json::from_slice::<Value>(body) else {
        return 400;
    };
    validate_value(s, &body)
}

/// Status for one parsed request body.
pub fn validate_value(s: &Scenario, body: &Value) -> u16 {
    if !body.is_object() {
        return 400;
    }
    let a = body_assignment(&s.spec, body);
    if !well_typed(&s.spec, &a) {
        return s.failure_status;
    }
    let violated = s.constraints.iter().any(|c| {
        evaluate_under(&c.precondition, &a).expect("scenario constraints reference spec paths only")
    });
    if violated {
        s.failure_status
    } else {
        200
    }
}

async fn handle(State(s): State<Arc<Scenario>>, body: Bytes) -> StatusCode {
    let status = validate_request(&s, &body);
    log::debug!("mock {} -> {}", String::from_utf8_lossy(&body), status);
    StatusCode::from_u16(status).expect("status codes are valid")
}

fn router(s: Scenario) -> Router {
    let path = s.spec.endpoint_path.clone();
    Router::new().route(&path, post(handle)).with_state(Arc::new(s))
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    s: Scenario,
    addr: SocketAddr,
    shutdown: impl Future<Output = ()> + Send + 'static,
    on_bound: impl FnOnce(SocketAddr),
) -> Result<(), MockError> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| MockError::Bind { addr, source })?;
    let local = listener.local_addr().map_err(|source| MockError::Bind { addr, source })?;
    on_bound(local);
    axum::serve(listener, router(s))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|source| MockError::Bind { addr, source })
}

/// A mock running on its own thread and runtime.
pub struct MockServer {
    local_addr: SocketAddr,
    endpoint_path: String,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<thread::JoinHandle<Result<(), MockError>>>,
}

impl MockServer {
    pub fn start(s: Scenario, addr: SocketAddr) -> Result<MockServer, MockError> {
        let endpoint_path = s.spec.endpoint_path.clone();
        let (stop, stopped) = oneshot::channel::<()>();
        let (bound_tx, bound_rx) = std::sync::mpsc::channel();
        let thread = thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .map_err(|source| MockError::Bind { addr, source })?;
            let tx = bound_tx.clone();
            rt.block_on(serve(s, addr, async { stopped.await.ok(); }, move |a| {
                tx.send(a).ok();
            }))
        });
        match bound_rx.recv() {
            Ok(local_addr) => Ok(MockServer { local_addr, endpoint_path, stop: Some(stop), thread: Some(thread) }),
            Err(_) => Err(thread.join().expect("mock thread panicked").expect_err("bind reported no address")),
        }
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// Full URL of the served endpoint.
    pub fn url(&self) -> String {
        format!("http://{}{}", self.local_addr, self.endpoint_path)
    }

    pub fn shutdown(mut self) -> Result<(), MockError> {
        self.stop_inner()
    }

    fn stop_inner(&mut self) -> Result<(), MockError> {
        if let Some(stop) = self.stop.take() {
            stop.send(()).ok();
        }
        match self.thread.take() {
            Some(t) => t.join().expect("mock thread panicked"),
            None => Ok(()),
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        let _ = self.stop_inner();
    }
}
