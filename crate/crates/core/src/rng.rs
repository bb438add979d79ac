//! Seeded random streams.
//!
//! Every random draw made by a run comes from a ChaCha stream whose key is
//! derived from the run seed plus a small coordinate tuple. Two draws with the
//! same coordinates always see the same stream, regardless of which thread
//! asks for it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Purpose tags keep substreams for different phases apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Init = 1,
    Variation = 2,
    Control = 3,
    Sampling = 4,
}

/// Stream for `(seed, purpose, major, minor)`.
pub fn substream(seed: u64, purpose: Purpose, major: u64, minor: u64) -> Stream {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(&major.to_le_bytes());
    key[24..32].copy_from_slice(&minor.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Plain stream for a seed, used by sequential algorithms.
pub fn seeded(seed: u64) -> Stream {
    substream(seed, Purpose::Control, 0, 0)
}
