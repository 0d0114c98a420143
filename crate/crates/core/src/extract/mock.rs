//! Local chat-completion endpoint that replays canned answers per page, for
//! offline runs and tests.
//!
//! Script file layout:
//!
//! ```json
//! {
//!   "responses": {"page-a": "[[\"/html/body/p\"]]"},
//!   "failures": {"page-b": [500, 500]},
//!   "require_auth": true
//! }
//! ```
//!
//! Requests name their page in the `X-Webrec-Page-Id` header. Listed failure
//! statuses are returned, in order, before the canned answer.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tiny_http::{Header, Response, Server};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockScript {
    pub responses: HashMap<String, String>,
    pub failures: HashMap<String, Vec<u16>>,
    pub require_auth: bool,
    /// Artificial latency per request, in milliseconds.
    pub delay_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordedRequest {
    pub page_id: Option<String>,
    pub body: Value,
}

#[derive(Default)]
struct State {
    served: Mutex<HashMap<String, usize>>,
    requests: Mutex<Vec<RecordedRequest>>,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
}

pub struct MockServer {
    server: Arc<Server>,
    addr: SocketAddr,
    state: Arc<State>,
    workers: Vec<JoinHandle<()>>,
}

impl MockServer {
    /// Binds to `addr` (use port 0 for an ephemeral port) and serves the
    /// script on a few worker threads until dropped.
    pub fn start(script: MockScript, addr: &str) -> std::io::Result<MockServer> {
        let server = Arc::new(Server::http(addr).map_err(std::io::Error::other)?);
        let bound = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("mock server is not bound to an IP address"))?;
        let state = Arc::new(State::default());
        let script = Arc::new(script);
        let workers = (0..4)
            .map(|_| {
                let (server, state, script) = (server.clone(), state.clone(), script.clone());
                std::thread::spawn(move || {
                    for req in server.incoming_requests() {
                        handle(req, &script, &state);
                    }
                })
            })
            .collect();
        Ok(MockServer {
            server,
            addr: bound,
            state,
            workers,
        })
    }

    pub fn start_local(script: MockScript) -> std::io::Result<MockServer> {
        Self::start(script, "127.0.0.1:0")
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}/v1/chat/completions", self.addr)
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.state
            .requests
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    pub fn max_in_flight(&self) -> usize {
        self.state.max_in_flight.load(Ordering::SeqCst)
    }

    /// Blocks until the server is shut down from another thread.
    pub fn join(mut self) {
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        for _ in 0..self.workers.len() {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

fn json_response(status: u16, body: Value) -> Response<std::io::Cursor<Vec<u8>>> {
    let header =
        Header::from_bytes("Content-Type", "application/json").expect("static header is valid");
    Response::from_string(body.to_string())
        .with_status_code(status)
        .with_header(header)
}

fn handle(mut req: tiny_http::Request, script: &MockScript, state: &State) {
    let now = state.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    state.max_in_flight.fetch_max(now, Ordering::SeqCst);
    if script.delay_ms > 0 {
        std::thread::sleep(Duration::from_millis(script.delay_ms));
    }

    let header = |name: &str| {
        req.headers()
            .iter()
            .find(|h| h.field.as_str().as_str().eq_ignore_ascii_case(name))
            .map(|h| h.value.as_str().to_string())
    };
    let page_id = header("X-Webrec-Page-Id");
    let auth = header("Authorization");
    let mut raw = String::new();
    let body = match req.as_reader().read_to_string(&mut raw) {
        Ok(_) => serde_json::from_str(&raw).unwrap_or(Value::Null),
        Err(_) => Value::Null,
    };
    state
        .requests
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .push(RecordedRequest {
            page_id: page_id.clone(),
            body: body.clone(),
        });

    let response = respond(script, state, page_id.as_deref(), auth.as_deref(), &body);
    state.in_flight.fetch_sub(1, Ordering::SeqCst);
    let _ = req.respond(response);
}

fn respond(
    script: &MockScript,
    state: &State,
    page_id: Option<&str>,
    auth: Option<&str>,
    body: &Value,
) -> Response<std::io::Cursor<Vec<u8>>> {
    let error = |status: u16, msg: &str| {
        json_response(status, serde_json::json!({"error": {"message": msg}}))
    };
    if script.require_auth && !auth.is_some_and(|a| a.starts_with("Bearer ") && a.len() > 7) {
        return error(401, "missing bearer token");
    }
    if body
        .pointer("/messages/0/content")
        .and_then(Value::as_str)
        .is_none()
    {
        return error(400, "request lacks messages[0].content");
    }
    let Some(page_id) = page_id else {
        return error(400, "missing X-Webrec-Page-Id header");
    };
    let attempt = {
        let mut served = state.served.lock().unwrap_or_else(|e| e.into_inner());
        let n = served.entry(page_id.to_string()).or_insert(0);
        *n += 1;
        *n
    };
    if let Some(&status) = script
        .failures
        .get(page_id)
        .and_then(|f| f.get(attempt - 1))
    {
        return error(status, "scripted failure");
    }
    match script.responses.get(page_id) {
        Some(content) => json_response(
            200,
            serde_json::json!({
                "choices": [{"index": 0, "message": {"role": "assistant", "content": content}}],
                "model": body.get("model").cloned().unwrap_or(Value::Null),
            }),
        ),
        None => error(404, "no canned response for page"),
    }
}
