//! Client for an external sentence-embedding service.
//!
//! Wire protocol:
//!
//! ```text
//! POST {url}/embed   {"texts": [..], "normalize": true}
//!   200 -> {"model": str, "dim": int, "embeddings": [[f64, ..], ..]}
//! GET  {url}/health
//!   200 -> {"status": "ok", "model": str, "dim": int}
//! non-200 bodies carry {"error": str}
//! ```
//!
//! Transport failures and 5xx responses are retried three times with
//! exponential backoff (100, 200, 400 ms); after that the call fails. There is
//! no fallback to another backend.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmbeddingBackend, EmbeddingVector};
use crate::error::{Error, Result};

pub const MAX_RETRIES: u32 = 3;
pub const INITIAL_BACKOFF: Duration = Duration::from_millis(100);
/// Texts per request; larger inputs are split and reassembled in order.
pub const MAX_BATCH: usize = 256;

#[derive(Debug, Serialize)]
pub struct EmbedRequest<'a> {
    pub texts: &'a [&'a str],
    pub normalize: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EmbedResponse {
    pub model: String,
    pub dim: usize,
    pub embeddings: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct HealthStatus {
    pub status: String,
    pub model: String,
    pub dim: usize,
}

#[derive(Debug, Deserialize)]
struct ErrorBody {
    error: String,
}

enum Attempt<T> {
    Done(T),
    Retry(String),
}

pub struct RemoteBackend {
    base_url: String,
    dim: usize,
    agent: ureq::Agent,
    backoff: Duration,
}

impl RemoteBackend {
    pub fn new(base_url: impl Into<String>, dim: usize) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(5))
            .timeout(Duration::from_secs(120))
            .build();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_owned(),
            dim,
            agent,
            backoff: INITIAL_BACKOFF,
        }
    }

    /// Override the first backoff delay (tests use a short one).
    pub fn with_initial_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    pub fn health(&self) -> Result<HealthStatus> {
        let url = format!("{}/health", self.base_url);
        self.with_retries(|| match self.agent.get(&url).call() {
            Ok(resp) => resp
                .into_json::<HealthStatus>()
                .map(Attempt::Done)
                .map_err(|e| Error::Protocol(format!("bad /health body: {e}"))),
            Err(e) => classify(e),
        })
    }

    fn post_chunk(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let url = format!("{}/embed", self.base_url);
        let body = EmbedRequest {
            texts,
            normalize: true,
        };
        let resp: EmbedResponse = self.with_retries(|| match self.agent.post(&url).send_json(&body) {
            Ok(resp) => resp
                .into_json::<EmbedResponse>()
                .map(Attempt::Done)
                .map_err(|e| Error::Protocol(format!("bad /embed body: {e}"))),
            Err(e) => classify(e),
        })?;
        self.decode(resp, texts.len())
    }

    fn decode(&self, resp: EmbedResponse, expected: usize) -> Result<Vec<EmbeddingVector>> {
        if resp.dim != self.dim {
            return Err(Error::Protocol(format!(
                "server model {:?} reports dim {}, client configured for {}",
                resp.model, resp.dim, self.dim
            )));
        }
        if resp.embeddings.len() != expected {
            return Err(Error::Protocol(format!(
                "requested {expected} embeddings, received {}",
                resp.embeddings.len()
            )));
        }
        resp.embeddings
            .into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    return Err(Error::Protocol(format!(
                        "embedding has {} components, expected {}",
                        v.len(),
                        self.dim
                    )));
                }
                EmbeddingVector::normalize(v)
                    .map_err(|e| Error::Protocol(format!("unusable embedding: {e}")))
            })
            .collect()
    }

    fn with_retries<T>(&self, mut call: impl FnMut() -> Result<Attempt<T>>) -> Result<T> {
        let mut delay = self.backoff;
        let mut attempts = 0;
        loop {
            attempts += 1;
            match call()? {
                Attempt::Done(v) => return Ok(v),
                Attempt::Retry(message) if attempts > MAX_RETRIES => {
                    return Err(Error::Transport { attempts, message });
                }
                Attempt::Retry(message) => {
                    log::warn!(
                        "embedding service call failed (attempt {attempts}): {message}; retrying in {delay:?}"
                    );
                    std::thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
    }
}

/// 5xx and transport errors are worth retrying; 4xx means the request itself is bad.
fn classify<T>(err: ureq::Error) -> Result<Attempt<T>> {
    match err {
        ureq::Error::Status(code, resp) => {
            let body = resp
                .into_json::<ErrorBody>()
                .map(|b| b.error)
                .unwrap_or_else(|_| "<no error body>".to_owned());
            if code >= 500 {
                Ok(Attempt::Retry(format!("HTTP {code}: {body}")))
            } else {
                Err(Error::Protocol(format!("HTTP {code}: {body}")))
            }
        }
        ureq::Error::Transport(t) => Ok(Attempt::Retry(t.to_string())),
    }
}

impl EmbeddingBackend for RemoteBackend {
    fn dim(&self) -> usize {
        self.dim
    }

    fn model_id(&self) -> String {
        format!("remote:{}/d{}", self.base_url, self.dim)
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(MAX_BATCH) {
            out.extend(self.post_chunk(chunk)?);
        }
        Ok(out)
    }
}
