//! Seeded, splittable random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream keyed by the
//! experiment seed and addressed by `(purpose, index)`, so a vertex's draw
//! depends only on its id and never on iteration order or thread layout.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Topology = 1,
    Bridges = 2,
    Activity = 3,
    Noise = 4,
    Auxiliary = 5,
}

#[derive(Debug, Clone)]
pub struct StreamFactory {
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent generator for `(purpose, index)`; index must fit in 56 bits.
    pub fn stream(&self, purpose: Purpose, index: u64) -> ChaCha8Rng {
        debug_assert!(index < 1 << 56);
        let mut rng = self.base.clone();
        rng.set_stream(((purpose as u64) << 56) | index);
        rng.set_word_pos(0);
        rng
    }
}
