//! Seeded random streams. Every stochastic stage draws from its own ChaCha
//! stream derived from one master seed, so stages can be rerun in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Scintillation = 1,
    Clicks = 2,
    Metadata = 3,
    LlrNoise = 4,
    Shuffle = 5,
    Verification = 6,
    Construction = 7,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Uniform draw on (0, 1].
pub fn open_unit<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}
