//! Seeded random streams.
//!
//! A single run seed fans out into independent named sub-streams so that, for
//! example, changing the batch size never perturbs the train/test split.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Split,
    Init,
    Batch,
    Bfs,
    Synthetic,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Split => 1,
            Stream::Init => 2,
            Stream::Batch => 3,
            Stream::Bfs => 4,
            Stream::Synthetic => 5,
        }
    }
}

/// Returns the generator for `stream` derived from `seed`.
pub fn stream(seed: u64, stream: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
