//! Seeded randomness.
//!
//! Every random draw in the crate comes from xoshiro256++, a 64-bit
//! shift-register generator. A single user seed is split into independent
//! per-purpose streams by applying the generator's long-jump (2^192 steps) once
//! per stream index, so weight initialization, batch shuffling and data
//! synthesis never share state even when they share a seed.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Prng = Xoshiro256PlusPlus;

/// Purpose-tagged stream selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init,
    Shuffle,
    Data,
    Trial,
}

impl Stream {
    fn index(self) -> usize {
        match self {
            Stream::Init => 0,
            Stream::Shuffle => 1,
            Stream::Data => 2,
            Stream::Trial => 3,
        }
    }
}

pub fn stream(seed: u64, purpose: Stream) -> Prng {
    let mut rng = Prng::seed_from_u64(seed);
    for _ in 0..purpose.index() {
        rng.long_jump();
    }
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn draw(seed: u64, purpose: Stream) -> Vec<u64> {
        let mut rng = stream(seed, purpose);
        (0..4).map(|_| rng.random()).collect()
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        assert_eq!(draw(9, Stream::Init), draw(9, Stream::Init));
        assert_ne!(draw(9, Stream::Init), draw(9, Stream::Shuffle));
        assert_ne!(draw(9, Stream::Init), draw(10, Stream::Init));
    }
}
