//! Numeric-oracle embedding.
//!
//! Extracts the signed decimal numbers of a sentence in order, keeps the first
//! eight (zero padded), squashes each with `v / (1 + |v|)` and embeds
//! `normalize([2, v'_1, ..., v'_8, 0, ...])`. Cosine similarity between two
//! sentences then depends only on their numeric content and decreases smoothly
//! as the numbers move apart, which is the property a semantic reward needs.

use std::sync::OnceLock;

use regex::Regex;

use super::EmbeddingVector;
use crate::error::{Error, Result};

pub const NUMERIC_SLOTS: usize = 8;
pub const ANCHOR: f64 = 2.0;

fn number_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    // ASCII hyphen, U+2212 minus sign, or plus, immediately before the digits.
    PATTERN.get_or_init(|| Regex::new(r"[-+\u{2212}]?[0-9]+(?:\.[0-9]+)?").expect("valid regex"))
}

/// All signed decimal numbers in `text`, in order of appearance.
pub fn extract_numbers(text: &str) -> Vec<f64> {
    number_pattern()
        .find_iter(text)
        .filter_map(|m| m.as_str().replace('\u{2212}', "-").parse::<f64>().ok())
        .collect()
}

pub fn squash(v: f64) -> f64 {
    v / (1.0 + v.abs())
}

pub fn embed_numeric_oracle(text: &str, dim: usize) -> Result<EmbeddingVector> {
    if dim < NUMERIC_SLOTS + 1 {
        return Err(Error::contract(format!(
            "numeric oracle needs dim >= {}, got {dim}",
            NUMERIC_SLOTS + 1
        )));
    }
    if text.is_empty() {
        return Err(Error::contract("cannot embed empty text"));
    }
    let mut values = vec![0.0; dim];
    values[0] = ANCHOR;
    for (slot, v) in values[1..=NUMERIC_SLOTS]
        .iter_mut()
        .zip(extract_numbers(text))
    {
        *slot = squash(v);
    }
    EmbeddingVector::normalize(values)
}
