//! Named, counter-keyed random substreams derived from one top-level seed.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Purpose of a random substream. Distinct purposes never share generator state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Channels = 1,
    Init = 2,
    Requests = 3,
    Library = 4,
    Subsample = 5,
    Oracle = 6,
}

/// Generator keyed by `(seed, stream, a, b)`; the same key always yields the
/// same sequence, independent of how many other substreams were drawn.
pub fn substream(seed: u64, stream: Stream, a: u64, b: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(stream as u64).to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..].copy_from_slice(&b.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}
