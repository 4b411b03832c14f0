//! Seeded random streams: SplitMix64 (state += 0x9e3779b97f4a7c15, then
//! the standard 64-bit finalizer), seeded with the raw 64-bit seed.
//! Uniforms take the top 53 bits; normals use Box–Muller with one value
//! consumed per pair of uniforms.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use std::f64::consts::TAU;

#[derive(Debug, Clone)]
pub struct GenRng(SplitMix64);

impl GenRng {
    pub fn new(seed: u64) -> Self {
        Self(SplitMix64::from_seed(seed.to_le_bytes()))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on (0, 1].
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    pub fn normals(&mut self, k: usize) -> Vec<f64> {
        (0..k).map(|_| self.normal()).collect()
    }
}
