//! Seedable pseudorandom streams.
//!
//! Every random draw in the crate comes from ChaCha20 (`rand_chacha`). A
//! stream is identified by `(seed, stream)`: the 256-bit key is expanded from
//! `seed` with `SeedableRng::seed_from_u64` and `stream` selects the 64-bit
//! ChaCha stream id, so substreams for different replications never overlap.
//!
//! Uniforms use the top 53 bits of a `u64`. Standard normals use the
//! Box–Muller transform of two open-interval uniforms, caching the second
//! variate.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math;

#[derive(Clone, Debug)]
pub struct Stream {
    inner: ChaCha20Rng,
    spare: Option<f64>,
}

const TWO_POW_NEG_53: f64 = 1.0 / 9_007_199_254_740_992.0;

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * TWO_POW_NEG_53
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n` without modulo bias. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.inner.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform_open();
        let r = math::sqrt(-2.0 * math::ln(u1));
        let theta = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(r * math::sin(theta));
        r * math::cos(theta)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.normal();
        }
    }

    /// A point drawn uniformly from the unit sphere in `ℝ^dim` (normalized
    /// standard normal vector).
    pub fn unit_sphere(&mut self, out: &mut [f64]) {
        loop {
            self.fill_normal(out);
            let n = crate::linalg::norm(out);
            if n > 0.0 {
                for v in out.iter_mut() {
                    *v /= n;
                }
                return;
            }
        }
    }
}
