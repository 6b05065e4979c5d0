//! Keyed deterministic random streams.
//!
//! Every random draw in this crate comes from a ChaCha8 stream whose 256-bit
//! key is the SHA-256 digest of a domain-tagged byte encoding of the call's
//! inputs. Streams are therefore pure functions of their key: the same
//! `(tag, parts)` always yields the same sequence on every platform and under
//! any thread schedule, and differently-tagged streams are independent.
//!
//! Key encoding: `tag` bytes, then for each part either a little-endian u64
//! (`Int`) or a length-prefixed UTF-8 string (`Str`), each preceded by a kind
//! byte. Uniform integers are drawn from `next_u64` by rejection, so sampling
//! depends only on the ChaCha8 output stream.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// One component of a stream key.
pub enum KeyPart<'a> {
    Int(u64),
    Str(&'a str),
}

/// Derives the keyed stream for `(tag, parts)`.
pub fn stream(tag: &str, parts: &[KeyPart<'_>]) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(tag.as_bytes());
    for part in parts {
        match part {
            KeyPart::Int(v) => {
                hasher.update([0u8]);
                hasher.update(v.to_le_bytes());
            }
            KeyPart::Str(s) => {
                hasher.update([1u8]);
                hasher.update((s.len() as u64).to_le_bytes());
                hasher.update(s.as_bytes());
            }
        }
    }
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Uniform draw from `0..bound` by rejection sampling, unbiased.
pub fn uniform_index(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    assert!(bound > 0, "uniform_index bound must be positive");
    // Accept only draws below the largest multiple of `bound` that fits in u64.
    let rem = ((u64::MAX % bound) + 1) % bound;
    let limit = u64::MAX - rem;
    loop {
        let v = rng.next_u64();
        if v <= limit {
            return v % bound;
        }
    }
}
