//! Counter-based randomness.
//!
//! Every uniform variate is a pure function of `(seed, site)`, so any region
//! of the lattice can be sampled in any order and re-sampling an enclosing
//! region reproduces the shared sites bit for bit.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Keyed hash of a lattice site.
#[inline]
pub fn site_key(seed: u64, site: &[i64]) -> u64 {
    let mut h = mix64(seed ^ 0x5851_f42d_4c95_7f2d);
    for (axis, &c) in site.iter().enumerate() {
        h = mix64(h ^ (c as u64).wrapping_mul(0xd6e8_feb8_6659_fd93) ^ (axis as u64) << 56);
    }
    h
}

/// Uniform variate in the open interval (0, 1) for a lattice site.
#[inline]
pub fn site_uniform(seed: u64, site: &[i64]) -> f64 {
    to_open_unit(site_key(seed, site))
}

/// Maps 64 random bits to (0, 1) with 52-bit resolution; never returns 0 or 1.
#[inline]
pub fn to_open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Seed for replicate `index` of a run with base seed `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

/// Small sequential generator for test fixtures and Monte Carlo integration.
#[derive(Debug, Clone)]
pub struct SplitMix {
    state: u64,
}

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    pub fn next_f64(&mut self) -> f64 {
        to_open_unit(self.next_u64())
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: u64) -> u64 {
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}
