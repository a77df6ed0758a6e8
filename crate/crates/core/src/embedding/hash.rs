//! Signed character-trigram feature hashing.
//!
//! The algorithm is fixed bit-exactly so other implementations can reproduce
//! it: lowercase, slide a window of three Unicode scalar values, hash each
//! window's UTF-8 bytes with 64-bit FNV-1a, add `+1` (top bit clear) or `-1`
//! (top bit set) to slot `h mod dim`, then L2-normalize. Texts with no
//! trigram, or whose contributions cancel, map to the first basis vector.

use super::EmbeddingVector;
use crate::error::{Error, Result};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

pub fn embed_hash(text: &str, dim: usize) -> Result<EmbeddingVector> {
    if dim < 8 {
        return Err(Error::contract(format!("hash embedding needs dim >= 8, got {dim}")));
    }
    if text.is_empty() {
        return Err(Error::contract("cannot embed empty text"));
    }
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    let mut acc = vec![0.0f64; dim];
    let mut buf = [0u8; 12];
    for window in chars.windows(3) {
        let mut len = 0;
        for c in window {
            len += c.encode_utf8(&mut buf[len..]).len();
        }
        let h = fnv1a64(&buf[..len]);
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        acc[(h % dim as u64) as usize] += sign;
    }
    if acc.iter().all(|&v| v == 0.0) {
        return Ok(EmbeddingVector::basis(dim, 0));
    }
    EmbeddingVector::normalize(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::cosine;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x8594_4171_f739_67e8);
    }

    #[test]
    fn abc_has_a_single_trigram() {
        let v = embed_hash("abc", 16).unwrap();
        let h = fnv1a64(b"abc");
        let slot = (h % 16) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        assert_eq!(v.as_slice()[slot], sign);
        assert_eq!(v.as_slice().iter().filter(|x| **x != 0.0).count(), 1);
    }

    #[test]
    fn case_insensitive() {
        assert_eq!(embed_hash("Hello World", 64).unwrap(), embed_hash("hello world", 64).unwrap());
    }

    #[test]
    fn short_text_maps_to_first_axis() {
        assert_eq!(embed_hash("ab", 32).unwrap(), EmbeddingVector::basis(32, 0));
    }

    #[test]
    fn preconditions() {
        assert!(embed_hash("", 16).is_err());
        assert!(embed_hash("abc", 7).is_err());
    }

    #[test]
    fn near_numerals_are_closer_than_unrelated_text() {
        let a = embed_hash("θ = 0.00", 768).unwrap();
        let b = embed_hash("θ = 0.01", 768).unwrap();
        let c = embed_hash("completely unrelated text", 768).unwrap();
        let near = cosine(&a, &b).unwrap();
        let far = cosine(&a, &c).unwrap();
        assert!(near > far, "near {near} far {far}");
    }
}
