//! In-process stand-in for the embedding service.

#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::{json, Value};
use tiny_http::{Header, Response, Server};

pub const MOCK_MODEL: &str = "mock-encoder";

/// Deterministic unit vector for `text`: a seeded sine pattern.
pub fn mock_vector(text: &str, dim: usize) -> Vec<f64> {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let phase = (h % 10_000) as f64 / 10_000.0 * std::f64::consts::TAU;
    let v: Vec<f64> = (0..dim).map(|i| (phase + 0.7 * i as f64).sin() + 0.1).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

#[derive(Debug, Clone)]
pub struct Recorded {
    pub method: String,
    pub path: String,
    pub body: Option<Value>,
}

#[derive(Debug, Clone, Copy)]
pub enum Fault {
    None,
    /// Answer the first `k` requests with 503.
    Unavailable(usize),
    /// Answer every request with this 4xx status.
    Reject(u16),
    /// Report a different dimension than requested.
    WrongDim,
}

pub struct MockServer {
    server: Arc<Server>,
    handle: Option<JoinHandle<()>>,
    pub url: String,
    pub requests: Arc<Mutex<Vec<Recorded>>>,
}

impl MockServer {
    pub fn start(dim: usize, fault: Fault) -> Self {
        let server = Arc::new(Server::http("127.0.0.1:0").expect("bind mock server"));
        let url = format!("http://{}", server.server_addr().to_ip().expect("tcp listener"));
        let requests = Arc::new(Mutex::new(Vec::new()));
        let seen = AtomicUsize::new(0);
        let handle = {
            let server = Arc::clone(&server);
            let requests = Arc::clone(&requests);
            std::thread::spawn(move || {
                for mut req in server.incoming_requests() {
                    let mut text = String::new();
                    let _ = req.as_reader().read_to_string(&mut text);
                    let body: Option<Value> = serde_json::from_str(&text).ok();
                    let method = req.method().to_string();
                    let path = req.url().to_owned();
                    requests.lock().unwrap().push(Recorded {
                        method: method.clone(),
                        path: path.clone(),
                        body: body.clone(),
                    });
                    let k = seen.fetch_add(1, Ordering::SeqCst);
                    let (status, reply) = respond(dim, fault, k, &method, &path, body.as_ref());
                    let header = Header::from_bytes("Content-Type", "application/json").unwrap();
                    let _ = req.respond(
                        Response::from_string(reply.to_string())
                            .with_status_code(status)
                            .with_header(header),
                    );
                }
            })
        };
        Self {
            server,
            handle: Some(handle),
            url,
            requests,
        }
    }

    pub fn recorded(&self) -> Vec<Recorded> {
        self.requests.lock().unwrap().clone()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn respond(dim: usize, fault: Fault, k: usize, method: &str, path: &str, body: Option<&Value>) -> (u16, Value) {
    match fault {
        Fault::Unavailable(n) if k < n => return (503, json!({"error": "warming up"})),
        Fault::Reject(code) => return (code, json!({"error": "rejected by mock"})),
        _ => {}
    }
    let reported = if matches!(fault, Fault::WrongDim) { dim + 1 } else { dim };
    match (method, path) {
        ("GET", "/health") => (200, json!({"status": "ok", "model": MOCK_MODEL, "dim": reported})),
        ("POST", "/embed") => {
            let Some(texts) = body.and_then(|b| b.get("texts")).and_then(Value::as_array) else {
                return (400, json!({"error": "missing texts"}));
            };
            let embeddings: Vec<Vec<f64>> = texts
                .iter()
                .map(|t| mock_vector(t.as_str().unwrap_or_default(), dim))
                .collect();
            (200, json!({"model": MOCK_MODEL, "dim": reported, "embeddings": embeddings}))
        }
        _ => (404, json!({"error": "no such route"})),
    }
}
