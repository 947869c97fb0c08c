//! Seed derivation. Every random draw in the simulator comes from a ChaCha
//! stream keyed by a tuple of integers, so results never depend on call order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const WORLD: u64 = 1;
pub(crate) const MODEL: u64 = 2;
pub(crate) const CONTEXT: u64 = 3;
pub(crate) const ALIGN: u64 = 4;
pub(crate) const DROPOUT: u64 = 5;
pub(crate) const ATTENTION: u64 = 6;
pub(crate) const SOURCE: u64 = 7;
pub(crate) const SAMPLING: u64 = 8;
pub(crate) const PASSES: u64 = 9;
pub(crate) const ANNOTATOR: u64 = 10;
pub(crate) const SCORE: u64 = 11;
pub(crate) const LEADER: u64 = 12;
pub(crate) const HEADS: u64 = 13;
pub(crate) const EMBEDDING: u64 = 14;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn derive(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub(crate) fn rng(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(parts))
}

pub(crate) fn hash_tokens(tokens: &[usize]) -> u64 {
    derive(&tokens.iter().map(|&t| t as u64).collect::<Vec<_>>()) ^ tokens.len() as u64
}
