//! Deterministic derivation of independent RNG streams for parallel
//! Monte-Carlo simulation.
//!
//! Every random draw in the simulator comes from a stream addressed by a
//! `(base seed, tag path)` pair, so slots, users, and antennas get disjoint
//! streams, results are independent of scheduling, and adding configurations
//! never perturbs the draws of existing ones.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// One round of the SplitMix64 output function.
#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a path of stream tags.
///
/// The mixing is a chained SplitMix64 — statistically well-spread but not
/// cryptographic, which is all a simulation needs. Distinct paths of the same
/// length map to distinct streams with overwhelming probability.
pub fn derive(base: u64, path: &[u64]) -> u64 {
    let mut state = base ^ 0x6A09_E667_F3BC_C908;
    let mut out = splitmix64(&mut state);
    for &tag in path {
        state = out ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        out = splitmix64(&mut state);
    }
    out
}

/// A ChaCha stream cipher RNG seeded from a derived stream id.
pub fn rng(base: u64, path: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive(base, path))
}
