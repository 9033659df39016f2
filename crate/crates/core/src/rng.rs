//! Named, hierarchical random streams.
//!
//! Every random draw in the crate comes from a `SeedStream` derived from the
//! master seed by name ("data", "noise", "modify") and then by integer child ids
//! (trial, sample id, step). Results therefore do not depend on evaluation
//! order or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedStream {
    key: u64,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream { key: splitmix(seed) }
    }

    pub fn named(self, name: &str) -> Self {
        self.child(fnv1a(name))
    }

    pub fn child(self, id: u64) -> Self {
        SeedStream { key: splitmix(self.key ^ splitmix(id.wrapping_add(0x5851_F42D_4C95_7F2D))) }
    }

    /// A plain u64 seed for APIs that take one (e.g. `SyntheticSpec::seed`).
    pub fn to_seed(self) -> u64 {
        self.key
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        let mut z = self.key;
        for chunk in seed.chunks_exact_mut(8) {
            z = splitmix(z);
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}
