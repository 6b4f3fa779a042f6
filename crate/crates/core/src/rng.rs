//! Seeded random stream shared by every synthetic generator.
//!
//! The stream is the ChaCha20 keystream (20 rounds, 64-bit block counter
//! starting at 0, stream id 0) keyed with the 64-bit seed written
//! little-endian into the first 8 key bytes and zeros elsewhere. Each `u64`
//! is two consecutive little-endian 32-bit keystream words, low word first.
//! Derived variates are defined only in terms of that `u64` sequence:
//!
//! - open uniform: `((w >> 11) as f64 + 0.5) * 2^-53`, always in (0, 1)
//! - standard normal: Box–Muller cosine branch on two open uniforms,
//!   `sqrt(-2 ln u1) * cos(2π u2)`; one normal per two words
//! - Student t: Bailey's polar method on pairs `2u - 1`, rejecting `w >= 1`
//!
//! so any language with a ChaCha20 implementation reproduces the streams.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

pub struct SeededStream {
    inner: ChaCha20Rng,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        SeededStream {
            inner: ChaCha20Rng::from_seed(key),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn student_t(&mut self, nu: f64) -> f64 {
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let w = u * u + v * v;
            if w < 1.0 && w > 0.0 {
                return u * (nu * (w.powf(-2.0 / nu) - 1.0) / w).sqrt();
            }
        }
    }

    /// Index uniform on `0..n` (Lemire-free modulo; bias is below 2^-40 for n < 2^24).
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
