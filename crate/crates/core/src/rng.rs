// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! Seeded random numbers with a fully specified pipeline.
//!
//! Uniforms come from xoshiro256** seeded through SplitMix64, converted as
//! `(next_u64 >> 11) · 2⁻⁵³`. Gaussians use the basic Box–Muller transform and
//! consume exactly two uniforms each. Nothing here depends on a sampler whose
//! algorithm may change between crate versions, so generated instances are
//! reproducible from the seed alone.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: Xoshiro256StarStar,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box–Muller (cosine branch only).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    /// Uniform point in the box `center ± radius` (per coordinate).
    pub fn in_box(&mut self, center: &[f64], radius: f64) -> Vec<f64> {
        center
            .iter()
            .map(|c| self.uniform_in(c - radius, c + radius))
            .collect()
    }

    /// Uniform point in the Euclidean ball of the given radius.
    pub fn in_ball(&mut self, center: &[f64], radius: f64) -> Vec<f64> {
        let n = center.len();
        let dir = self.normal_vec(n);
        let nd = crate::linalg::norm(&dir).max(f64::MIN_POSITIVE);
        let r = radius * self.uniform().powf(1.0 / n as f64);
        center
            .iter()
            .zip(&dir)
            .map(|(c, d)| c + r * d / nd)
            .collect()
    }
}
