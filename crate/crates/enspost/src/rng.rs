//! Deterministic RNG substreams.
//!
//! Every random decision in a run is drawn from a stream keyed by the run
//! seed plus a small integer path (station, date, purpose, ...). Streams are
//! independent of thread scheduling, so parallel runs reproduce bit-exactly.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 step, used to mix path components into a stream key.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a reproducible substream from a seed and a key path.
pub fn substream(seed: u64, path: &[u64]) -> ChaCha12Rng {
    let mut state = splitmix64(seed);
    for &p in path {
        state = splitmix64(state ^ p);
    }
    ChaCha12Rng::seed_from_u64(state)
}
