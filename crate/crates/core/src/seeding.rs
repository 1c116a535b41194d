//! Deterministic derivation of named random substreams from a master seed.
//!
//! Every randomized component in the toolkit pulls its randomness from a
//! substream addressed by `(master seed, label)` or `(master seed, label,
//! trial index)`. Substreams with distinct addresses are independent ChaCha
//! streams, so concurrent trials and replayed oracle strategies never share
//! state.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fnv1a(label: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in label.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// A named substream of the master seed.
pub fn substream(master_seed: u64, label: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(fnv1a(label));
    rng
}

/// A per-trial substream, independent across `(label, trial)` pairs.
pub fn trial_substream(master_seed: u64, label: &str, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(fnv1a(label).wrapping_add(trial.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
    rng
}
