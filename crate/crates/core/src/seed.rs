//! Keyed random-number substreams.
//!
//! Every stochastic consumer in a run draws from its own ChaCha8 stream whose
//! 256-bit seed is
//!
//! ```text
//! SHA-256( "uvaa-substream-v1" || master_seed (u64 LE) || len(tag) (u32 LE) || tag
//!          || index_0 (u64 LE) || index_1 (u64 LE) || ... )
//! ```
//!
//! Streams are addressed by *what* consumes them (purpose tag plus indices such
//! as generation and task slot), never by the order in which work is scheduled,
//! so results do not depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Concrete RNG type used everywhere in the crate.
pub type Rng = ChaCha8Rng;

const DOMAIN: &[u8] = b"uvaa-substream-v1";

/// Derive the 32-byte seed for `(master, tag, indices)`.
pub fn substream_seed(master: u64, tag: &str, indices: &[u64]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(DOMAIN);
    hasher.update(master.to_le_bytes());
    hasher.update((tag.len() as u32).to_le_bytes());
    hasher.update(tag.as_bytes());
    for idx in indices {
        hasher.update(idx.to_le_bytes());
    }
    hasher.finalize().into()
}

/// Build an RNG for the substream `(master, tag, indices)`.
pub fn substream(master: u64, tag: &str, indices: &[u64]) -> Rng {
    Rng::from_seed(substream_seed(master, tag, indices))
}

/// Derive a 64-bit child seed, e.g. for an environment episode.
pub fn derive_u64(master: u64, tag: &str, indices: &[u64]) -> u64 {
    let s = substream_seed(master, tag, indices);
    u64::from_le_bytes(s[..8].try_into().expect("8 bytes"))
}

/// Purpose tags in use, with the index tuple each one takes. Written verbatim
/// into run manifests so alternate implementations can regenerate streams.
pub const DERIVATION_TABLE: &[(&str, &str)] = &[
    ("init", "[generation, task_slot] -> network initialisation of a fresh task"),
    ("train", "[generation, task_id, iteration] -> rollout env seeds and action noise"),
    ("eval", "[episode] -> evaluation episode seeds shared by all policies of a run"),
    ("select", "[generation] -> hyper-sphere roulette draws"),
    ("replace", "[generation, task_slot] -> replacement task after a training failure"),
    ("random-baseline", "[policy] -> random-parameter baseline policy initialisation"),
];
