//! Counter-based random numbers.
//!
//! Every draw is a pure function of `(seed, user, period, lane)`, so results
//! do not depend on how users are split across threads or on how many arms
//! an experiment has. The mixing function is the SplitMix64 finalizer:
//!
//! ```text
//! mix(z) = z ^= z >> 30; z *= 0xbf58476d1ce4e5b9;
//!          z ^= z >> 27; z *= 0x94d049bb133111eb;
//!          z ^ (z >> 31)
//! draw(seed, user, period, lane) =
//!     h = mix(seed + GAMMA)
//!     h = mix(h ^ (user * K_USER + GAMMA))
//!     h = mix(h ^ ((period * 4 + lane) * K_PERIOD + GAMMA))
//! ```
//!
//! with wrapping arithmetic on `u64`. A uniform in `[0, 1)` takes the top
//! 53 bits of a draw.

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
const K_USER: u64 = 0xd1b5_4a32_d192_ed03;
const K_PERIOD: u64 = 0xaef1_7502_108e_f2d9;
const K_STREAM: u64 = 0xf135_7aea_2e62_a9c5;

#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng {
            key: mix(seed.wrapping_add(GAMMA)),
        }
    }

    /// Independent generator for sub-experiment `index` (an A/B arm, an
    /// audit, ...).
    pub fn stream(&self, index: u64) -> Self {
        CounterRng {
            key: mix(self.key ^ index.wrapping_mul(K_STREAM).wrapping_add(GAMMA)),
        }
    }

    #[inline]
    pub fn bits(&self, user: u64, period: u64, lane: u64) -> u64 {
        let h = mix(self.key ^ user.wrapping_mul(K_USER).wrapping_add(GAMMA));
        mix(h
            ^ (period.wrapping_mul(4).wrapping_add(lane & 3))
                .wrapping_mul(K_PERIOD)
                .wrapping_add(GAMMA))
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn uniform(&self, user: u64, period: u64, lane: u64) -> f64 {
        (self.bits(user, period, lane) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
