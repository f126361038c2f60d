//! Seeded random streams.
//!
//! Every consumer draws from its own ChaCha stream keyed by the root seed and a
//! fixed stream index, so adding a new consumer never shifts the numbers seen by
//! an existing one. ChaCha is counter based and portable, which keeps runs
//! reproducible across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Fixed stream indices, one per consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RngStream {
    Exploration,
    Minibatch,
    WeightInit,
    Baseline,
    Perturbation,
    StartPoint,
    Instance,
    Custom(u64),
}

impl RngStream {
    pub fn index(self) -> u64 {
        match self {
            RngStream::Exploration => 1,
            RngStream::Minibatch => 2,
            RngStream::WeightInit => 3,
            RngStream::Baseline => 4,
            RngStream::Perturbation => 5,
            RngStream::StartPoint => 6,
            RngStream::Instance => 7,
            RngStream::Custom(i) => 1_000 + i,
        }
    }
}

pub fn stream(seed: u64, which: RngStream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.index());
    rng
}
