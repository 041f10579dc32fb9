//! Seeded pseudo-random streams.
//!
//! The generator is xoshiro256** seeded through splitmix64, with uniform
//! doubles taken from the top 53 bits and normal draws from the Box–Muller
//! transform. Everything here is fully specified so that another language
//! can reproduce the same streams bit for bit:
//!
//! * `splitmix64`: `z = (s += 0x9E3779B97F4A7C15)`,
//!   `z = (z ^ z>>30) * 0xBF58476D1CE4E5B9`, `z = (z ^ z>>27) * 0x94D049BB133111EB`,
//!   `z ^ z>>31`. Four successive outputs seed the xoshiro state.
//! * `next_f64`: `(next_u64() >> 11) * 2^-53`, in `[0, 1)`.
//! * `next_normal`: `u1 = 1 - next_f64()` (in `(0, 1]`), `u2 = next_f64()`,
//!   `rho = sqrt(-2 ln u1)`; returns `rho cos(2 pi u2)` and caches
//!   `rho sin(2 pi u2)` for the following call.
//! * `below(n)`: the high 64 bits of `next_u64() * n` (128-bit product).

use crate::math::{cos, ln, sin, sqrt, PI};

/// One step of splitmix64 on `state`.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// xoshiro256** with a one-value Box–Muller cache.
#[derive(Debug, Clone, PartialEq)]
pub struct Xoshiro256 {
    s: [u64; 4],
    spare_normal: Option<f64>,
}

impl Xoshiro256 {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Self { s, spare_normal: None }
    }

    /// Independent stream for item `index` of a run seeded with `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        Self::new(seed ^ index)
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal draw.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let rho = sqrt(-2.0 * ln(u1));
        let angle = 2.0 * PI * u2;
        self.spare_normal = Some(rho * sin(angle));
        rho * cos(angle)
    }

    /// Uniform integer in `[0, n)`. `n` must be non-zero.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((u128::from(self.next_u64()) * n as u128) >> 64) as usize
    }

    /// Fisher–Yates shuffle, walking from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
