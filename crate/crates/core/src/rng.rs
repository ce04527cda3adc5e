//! Counter-based seed derivation.
//!
//! Every simulated user draws from its own generator, seeded from the tuple
//! `(root seed, lane, iteration, user index)`. Results therefore do not depend
//! on how users are batched across worker threads.

use rand::rngs::SmallRng;
use rand::SeedableRng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Root of a family of independent random streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedTree {
    root: u64,
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        Self { root: seed }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// A sub-tree for an independent part of a computation (a repeat, a squad, ...).
    pub fn child(&self, label: u64) -> SeedTree {
        SeedTree {
            root: mix64(self.root.wrapping_add(GOLDEN_GAMMA) ^ mix64(label.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }

    /// 64-bit key of the stream identified by `(lane, iteration, user)`.
    #[inline]
    pub fn key(&self, lane: u64, iteration: u64, user: u64) -> u64 {
        let mut h = mix64(self.root ^ GOLDEN_GAMMA);
        h = mix64(h ^ lane.wrapping_mul(GOLDEN_GAMMA));
        h = mix64(h ^ iteration.wrapping_add(0x2545_f491_4f6c_dd1d));
        mix64(h.wrapping_add(user.wrapping_mul(GOLDEN_GAMMA)))
    }

    #[inline]
    pub fn user_rng(&self, lane: u64, iteration: u64, user: u64) -> SmallRng {
        SmallRng::seed_from_u64(self.key(lane, iteration, user))
    }
}
