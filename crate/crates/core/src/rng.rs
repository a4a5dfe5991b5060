//! Seed derivation. Every random stream in the crate descends from one
//! 64-bit seed through labelled, indexed splits, so adding a consumer never
//! perturbs the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// A node in the seed derivation tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedTree(u64);

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        SeedTree(seed)
    }

    pub fn seed(self) -> u64 {
        self.0
    }

    pub fn child(self, label: &str) -> Self {
        SeedTree(splitmix64(self.0 ^ splitmix64(fnv1a(label))))
    }

    pub fn index(self, i: u64) -> Self {
        SeedTree(splitmix64(self.0.wrapping_add(splitmix64(i ^ 0xA076_1D64_78BD_642F))))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}
