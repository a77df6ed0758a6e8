//! Sentence embeddings and cosine similarity.
//!
//! An [`Embedder`] turns sentences into unit-norm [`EmbeddingVector`]s through
//! one of three backends:
//!
//! * [`Backend::Hash`]: signed character-trigram feature hashing. Bit-exact and
//!   portable, but carries no semantics; used for plumbing and determinism tests.
//! * [`Backend::NumericOracle`]: reads the numbers out of a sentence and embeds
//!   them so that similarity to a goal sentence falls smoothly with numeric
//!   discrepancy. Stands in for a real sentence model in end-to-end runs.
//! * [`Backend::Remote`]: HTTP client for an external sentence-embedding
//!   service (see [`remote`] for the wire format).
//!
//! All backends sit behind an optional exact-string LRU cache.

mod cache;
pub mod hash;
pub mod oracle;
pub mod remote;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use cache::EmbeddingCache;
pub use hash::embed_hash;
pub use oracle::embed_numeric_oracle;
pub use remote::{HealthStatus, RemoteBackend};

use crate::error::{Error, Result};

pub const DEFAULT_DIM: usize = 768;

/// Environment variable that overrides the configured remote endpoint.
pub const REMOTE_URL_ENV: &str = "LINGUAREWARD_REMOTE_URL";

const NORM_TOL: f64 = 1e-9;

/// A unit-norm embedding. The only way to build one is through
/// [`EmbeddingVector::normalize`], so every instance is canonical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// L2-normalize `values`. Fails on empty, non-finite, or all-zero input.
    pub fn normalize(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::contract("embedding must have positive dimension"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("embedding contains non-finite components"));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::contract("cannot normalize a zero vector"));
        }
        values.iter_mut().for_each(|v| *v /= norm);
        Ok(Self { values })
    }

    /// Unit vector along `axis`.
    pub fn basis(dim: usize, axis: usize) -> Self {
        assert!(axis < dim, "basis axis {axis} out of range for dim {dim}");
        let mut values = vec![0.0; dim];
        values[axis] = 1.0;
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOL
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        check_dims(self, other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    pub fn neg(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

fn check_dims(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Cosine similarity of two unit vectors, i.e. their dot product clamped to
/// `[-1, 1]` against rounding.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    check_dims(a, b)?;
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok(dot.clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Hash,
    NumericOracle,
    Remote,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hash" => Ok(Backend::Hash),
            "numeric_oracle" | "oracle" => Ok(Backend::NumericOracle),
            "remote" => Ok(Backend::Remote),
            other => Err(Error::config(format!(
                "unknown embedding backend {other:?} (expected hash, numeric_oracle, remote)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedderSpec {
    pub backend: Backend,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub remote_url: Option<String>,
    #[serde(default = "default_cache_capacity")]
    pub cache_capacity: usize,
}

fn default_dim() -> usize {
    DEFAULT_DIM
}

fn default_cache_capacity() -> usize {
    65_536
}

impl EmbedderSpec {
    pub fn new(backend: Backend, dim: usize) -> Self {
        Self {
            backend,
            dim,
            remote_url: None,
            cache_capacity: default_cache_capacity(),
        }
    }

    pub fn hash(dim: usize) -> Self {
        Self::new(Backend::Hash, dim)
    }

    pub fn numeric_oracle(dim: usize) -> Self {
        Self::new(Backend::NumericOracle, dim)
    }

    pub fn remote(url: impl Into<String>, dim: usize) -> Self {
        Self {
            remote_url: Some(url.into()),
            ..Self::new(Backend::Remote, dim)
        }
    }

    pub fn with_cache_capacity(mut self, capacity: usize) -> Self {
        self.cache_capacity = capacity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.backend {
            Backend::Hash if self.dim < 8 => {
                Err(Error::config(format!("hash backend needs dim >= 8, got {}", self.dim)))
            }
            Backend::NumericOracle if self.dim < 9 => Err(Error::config(format!(
                "numeric_oracle backend needs dim >= 9, got {}",
                self.dim
            ))),
            Backend::Remote if self.dim == 0 => Err(Error::config("remote dim must be positive")),
            Backend::Remote if self.remote_url.is_none() => {
                Err(Error::config("remote backend requires remote_url"))
            }
            _ => Ok(()),
        }
    }

    /// Stable identifier for logs and run manifests.
    pub fn identifier(&self) -> String {
        match self.backend {
            Backend::Hash => format!("hash-fnv1a-trigram/d{}", self.dim),
            Backend::NumericOracle => format!("numeric-oracle-v1/d{}", self.dim),
            Backend::Remote => format!(
                "remote:{}/d{}",
                self.remote_url.as_deref().unwrap_or("?"),
                self.dim
            ),
        }
    }
}

/// What a concrete embedding backend must provide. Implementations receive
/// non-empty texts and must return one vector per text, in order.
pub trait EmbeddingBackend: Send + Sync {
    fn dim(&self) -> usize;
    fn model_id(&self) -> String;
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>>;
}

struct HashBackend {
    dim: usize,
}

impl EmbeddingBackend for HashBackend {
    fn dim(&self) -> usize {
        self.dim
    }

    fn model_id(&self) -> String {
        format!("hash-fnv1a-trigram/d{}", self.dim)
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        texts.iter().map(|t| embed_hash(t, self.dim)).collect()
    }
}

struct OracleBackend {
    dim: usize,
}

impl EmbeddingBackend for OracleBackend {
    fn dim(&self) -> usize {
        self.dim
    }

    fn model_id(&self) -> String {
        format!("numeric-oracle-v1/d{}", self.dim)
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        texts.iter().map(|t| embed_numeric_oracle(t, self.dim)).collect()
    }
}

/// A backend plus its cache. Cheap to clone; clones share the cache.
#[derive(Clone)]
pub struct Embedder {
    spec: EmbedderSpec,
    backend: Arc<dyn EmbeddingBackend>,
    cache: Option<Arc<EmbeddingCache>>,
}

impl std::fmt::Debug for Embedder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Embedder")
            .field("spec", &self.spec)
            .field("model", &self.backend.model_id())
            .finish()
    }
}

impl Embedder {
    /// Build the backend named by `spec`. For the remote backend the
    /// `LINGUAREWARD_REMOTE_URL` environment variable, when set, replaces the
    /// configured URL.
    pub fn from_spec(spec: &EmbedderSpec) -> Result<Self> {
        let mut spec = spec.clone();
        if spec.backend == Backend::Remote {
            if let Ok(url) = std::env::var(REMOTE_URL_ENV) {
                if !url.is_empty() {
                    spec.remote_url = Some(url);
                }
            }
        }
        spec.validate()?;
        let backend: Arc<dyn EmbeddingBackend> = match spec.backend {
            Backend::Hash => Arc::new(HashBackend { dim: spec.dim }),
            Backend::NumericOracle => Arc::new(OracleBackend { dim: spec.dim }),
            Backend::Remote => Arc::new(RemoteBackend::new(
                spec.remote_url.clone().expect("validated"),
                spec.dim,
            )),
        };
        Ok(Self::with_backend(spec, backend))
    }

    /// Wrap a caller-provided backend.
    pub fn with_backend(spec: EmbedderSpec, backend: Arc<dyn EmbeddingBackend>) -> Self {
        let cache = (spec.cache_capacity > 0)
            .then(|| Arc::new(EmbeddingCache::new(spec.cache_capacity)));
        Self {
            spec,
            backend,
            cache,
        }
    }

    pub fn spec(&self) -> &EmbedderSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.backend.dim()
    }

    pub fn model_id(&self) -> String {
        self.backend.model_id()
    }

    pub fn cache(&self) -> Option<&EmbeddingCache> {
        self.cache.as_deref()
    }

    /// Embed `texts` in order. Every text must be non-empty.
    pub fn embed<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<EmbeddingVector>> {
        if let Some(i) = texts.iter().position(|t| t.as_ref().is_empty()) {
            return Err(Error::contract(format!("text at index {i} is empty")));
        }
        let Some(cache) = &self.cache else {
            let refs: Vec<&str> = texts.iter().map(AsRef::as_ref).collect();
            return self.checked_backend_call(&refs);
        };

        let mut out: Vec<Option<EmbeddingVector>> = texts
            .iter()
            .map(|t| cache.get(t.as_ref()))
            .collect();
        let mut missing: Vec<&str> = Vec::new();
        for (slot, text) in out.iter().zip(texts) {
            if slot.is_none() && !missing.contains(&text.as_ref()) {
                missing.push(text.as_ref());
            }
        }
        if !missing.is_empty() {
            let fresh = self.checked_backend_call(&missing)?;
            for (text, vector) in missing.iter().zip(fresh) {
                cache.insert(text, vector.clone());
                for (slot, t) in out.iter_mut().zip(texts) {
                    if slot.is_none() && t.as_ref() == *text {
                        *slot = Some(vector.clone());
                    }
                }
            }
        }
        Ok(out.into_iter().map(|v| v.expect("filled above")).collect())
    }

    pub fn embed_one(&self, text: &str) -> Result<EmbeddingVector> {
        Ok(self.embed(&[text])?.pop().expect("one output per input"))
    }

    fn checked_backend_call(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let out = self.backend.embed_batch(texts)?;
        if out.len() != texts.len() {
            return Err(Error::Protocol(format!(
                "backend returned {} embeddings for {} texts",
                out.len(),
                texts.len()
            )));
        }
        if let Some(v) = out.iter().find(|v| v.dim() != self.dim()) {
            return Err(Error::Protocol(format!(
                "backend returned dim {} but embedder is configured for {}",
                v.dim(),
                self.dim()
            )));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(values: Vec<f64>) -> EmbeddingVector {
        EmbeddingVector::normalize(values).unwrap()
    }

    #[test]
    fn cosine_identity_antipodal_orthogonal() {
        let e1 = EmbeddingVector::basis(4, 0);
        let e2 = EmbeddingVector::basis(4, 1);
        assert_eq!(cosine(&e1, &e1).unwrap(), 1.0);
        assert_eq!(cosine(&e1, &e1.neg()).unwrap(), -1.0);
        assert_eq!(cosine(&e1, &e2).unwrap(), 0.0);
    }

    #[test]
    fn cosine_rejects_dimension_mismatch() {
        let a = EmbeddingVector::basis(4, 0);
        let b = EmbeddingVector::basis(5, 0);
        assert!(matches!(
            cosine(&a, &b),
            Err(Error::DimensionMismatch { expected: 4, got: 5 })
        ));
    }

    #[test]
    fn normalize_rejects_degenerate_input() {
        assert!(EmbeddingVector::normalize(vec![]).is_err());
        assert!(EmbeddingVector::normalize(vec![0.0, 0.0]).is_err());
        assert!(EmbeddingVector::normalize(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(EmbedderSpec::hash(7).validate().is_err());
        assert!(EmbedderSpec::hash(8).validate().is_ok());
        assert!(EmbedderSpec::numeric_oracle(8).validate().is_err());
        assert!(EmbedderSpec::new(Backend::Remote, 768).validate().is_err());
        assert!(EmbedderSpec::remote("http://localhost:1", 768).validate().is_ok());
    }

    #[test]
    fn embed_rejects_empty_text() {
        let e = Embedder::from_spec(&EmbedderSpec::hash(16)).unwrap();
        assert!(matches!(e.embed(&["ok", ""]), Err(Error::Contract(_))));
    }

    #[test]
    fn duplicates_in_batch_are_identical() {
        for spec in [EmbedderSpec::hash(64), EmbedderSpec::numeric_oracle(64)] {
            let e = Embedder::from_spec(&spec).unwrap();
            let out = e.embed(&["x", "y", "x"]).unwrap();
            assert_eq!(out[0], out[2]);
            assert_eq!(out.len(), 3);
        }
    }

    #[test]
    fn repeated_calls_are_bit_identical() {
        let e = Embedder::from_spec(&EmbedderSpec::hash(768)).unwrap();
        let a = e.embed(&["a"]).unwrap();
        let b = e.embed(&["a"]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pendulum_goal_sentence_is_unit_norm() {
        let text = "The state is at θ = 0.00, θ̇ = 0.00.";
        for spec in [EmbedderSpec::hash(768), EmbedderSpec::numeric_oracle(768)] {
            let v = Embedder::from_spec(&spec).unwrap().embed_one(text).unwrap();
            assert_eq!(v.dim(), 768);
            assert!(v.is_unit());
        }
    }

    fn sentences() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec("[a-z0-9 .=-]{1,12}", 1..20)
    }

    proptest! {
        #[test]
        fn cache_is_transparent(texts in sentences(), cap in 1usize..8) {
            for backend in [Backend::Hash, Backend::NumericOracle] {
                let cached = Embedder::from_spec(&EmbedderSpec::new(backend, 32).with_cache_capacity(cap)).unwrap();
                let plain = Embedder::from_spec(&EmbedderSpec::new(backend, 32).with_cache_capacity(0)).unwrap();
                // Twice through the cached embedder so hits and evictions both happen.
                let first = cached.embed(&texts).unwrap();
                let second = cached.embed(&texts).unwrap();
                let reference = plain.embed(&texts).unwrap();
                prop_assert_eq!(&first, &reference);
                prop_assert_eq!(&second, &reference);
            }
        }

        #[test]
        fn batch_equals_one_at_a_time(texts in sentences()) {
            for backend in [Backend::Hash, Backend::NumericOracle] {
                let e = Embedder::from_spec(&EmbedderSpec::new(backend, 32).with_cache_capacity(0)).unwrap();
                let batch = e.embed(&texts).unwrap();
                for (text, v) in texts.iter().zip(&batch) {
                    prop_assert_eq!(&e.embed_one(text).unwrap(), v);
                }
            }
        }

        #[test]
        fn outputs_are_unit_norm(text in "\\PC{1,40}") {
            for backend in [Backend::Hash, Backend::NumericOracle] {
                let e = Embedder::from_spec(&EmbedderSpec::new(backend, 64)).unwrap();
                let v = e.embed_one(&text).unwrap();
                prop_assert!((v.norm() - 1.0).abs() <= 1e-9);
            }
        }

        #[test]
        fn lipschitz_reward_bound(
            g in prop::collection::vec(-1.0f64..1.0, 16),
            a in prop::collection::vec(-1.0f64..1.0, 16),
            b in prop::collection::vec(-1.0f64..1.0, 16),
        ) {
            prop_assume!(g.iter().any(|v| v.abs() > 1e-6));
            prop_assume!(a.iter().any(|v| v.abs() > 1e-6));
            prop_assume!(b.iter().any(|v| v.abs() > 1e-6));
            let (g, a, b) = (unit(g), unit(a), unit(b));
            let lhs = (cosine(&g, &a).unwrap() - cosine(&g, &b).unwrap()).abs();
            prop_assert!(lhs <= a.distance(&b).unwrap() + 1e-12);
        }

        #[test]
        fn cosine_is_symmetric(
            a in prop::collection::vec(-1.0f64..1.0, 8),
            b in prop::collection::vec(-1.0f64..1.0, 8),
        ) {
            prop_assume!(a.iter().any(|v| v.abs() > 1e-6) && b.iter().any(|v| v.abs() > 1e-6));
            let (a, b) = (unit(a), unit(b));
            prop_assert_eq!(cosine(&a, &b).unwrap(), cosine(&b, &a).unwrap());
            prop_assert!((cosine(&a, &a).unwrap() - 1.0).abs() <= 1e-9);
        }
    }
}
