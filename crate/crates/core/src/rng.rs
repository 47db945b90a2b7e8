//! Reproducible random streams.
//!
//! A [`RngStream`] names a ChaCha8 key (the seed) and a ChaCha stream id.
//! Parallel work derives child streams from an index, so the draws seen by
//! replicate `i` never depend on which worker ran it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Deterministic child stream for sub-task `index`.
    pub fn substream(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_stream_same_draws() {
        let s = RngStream::new(42, 7);
        let a: Vec<u64> = (0..8).map(|_| 0).scan(s.rng(), |r, _: u64| Some(r.random())).collect();
        let b: Vec<u64> = (0..8).map(|_| 0).scan(s.rng(), |r, _: u64| Some(r.random())).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn substreams_differ() {
        let s = RngStream::new(42, 0);
        let x: u64 = s.substream(0).rng().random();
        let y: u64 = s.substream(1).rng().random();
        let z: u64 = RngStream::new(43, 0).substream(0).rng().random();
        assert_ne!(x, y);
        assert_ne!(x, z);
    }
}
