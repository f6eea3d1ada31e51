//! Deterministic random streams.
//!
//! A single run seed fans out into independent generators, one per
//! purpose (and optionally per index, e.g. per evaluation episode), so a
//! subsystem can be re-run on its own without disturbing the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a derived generator is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Placement = 1,
    Actions = 2,
    Exploration = 3,
    Replay = 4,
    NetworkInit = 5,
    Field = 6,
    Evaluation = 7,
    Synthetic = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for `(seed, stream, index)`.
pub fn substream(seed: u64, stream: Stream, index: u64) -> SimRng {
    let mixed = splitmix64(seed ^ splitmix64((stream as u64) << 48 ^ splitmix64(index)));
    ChaCha8Rng::seed_from_u64(mixed)
}
