// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! First-order oracles for the weakly convex term `f` and the composite
//! problem record `φ = f + h`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{PbfError, Result};
use crate::linalg;
use crate::rng::SeededRng;
use crate::simple_terms::SimpleTerm;

/// Deterministic value and subgradient oracle for `f`.
///
/// `subgradient(x)` must return the same element of `∂f(x)` on every call so
/// that traces are reproducible. Implementations must be total on the domain
/// of every `h` they are paired with.
pub trait HybridOracle: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn subgradient(&self, x: &[f64]) -> Vec<f64>;

    fn value_and_subgradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.value(x), self.subgradient(x))
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type SubgradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Oracle assembled from a pair of closures.
pub struct FnOracle {
    dim: usize,
    value: Box<ValueFn>,
    subgrad: Box<SubgradFn>,
}

impl FnOracle {
    pub fn new(
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        subgrad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Box::new(value),
            subgrad: Box::new(subgrad),
        }
    }
}

impl fmt::Debug for FnOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnOracle").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl HybridOracle for FnOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        (self.subgrad)(x)
    }
}

/// `min φ(x) = f(x) + h(x)` together with the declared constants.
///
/// `m` is the weak-convexity modulus, `big_m` and `lip` are the `(M, L)` of
/// the hybrid condition `‖f′(u) − f′(v)‖ ≤ 2M + L‖u − v‖` on `dom h`.
#[derive(Clone)]
pub struct Problem {
    pub f: Arc<dyn HybridOracle>,
    pub h: SimpleTerm,
    pub m: f64,
    pub big_m: f64,
    pub lip: f64,
    pub phi_lower_hint: Option<f64>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("dim", &self.dim())
            .field("h", &self.h)
            .field("m", &self.m)
            .field("M", &self.big_m)
            .field("L", &self.lip)
            .field("phi_lower_hint", &self.phi_lower_hint)
            .finish()
    }
}

impl Problem {
    pub fn new(f: Arc<dyn HybridOracle>, h: SimpleTerm, m: f64, big_m: f64, lip: f64) -> Result<Self> {
        if f.dim() == 0 {
            return Err(PbfError::invalid("dimension must be positive"));
        }
        if f.dim() != h.dim() {
            return Err(PbfError::DimensionMismatch {
                expected: f.dim(),
                got: h.dim(),
            });
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(PbfError::invalid("weak-convexity modulus m must be finite and > 0"));
        }
        if !(big_m >= 0.0 && big_m.is_finite() && lip >= 0.0 && lip.is_finite()) {
            return Err(PbfError::invalid("hybrid constants M and L must be finite and ≥ 0"));
        }
        Ok(Self {
            f,
            h,
            m,
            big_m,
            lip,
            phi_lower_hint: None,
        })
    }

    pub fn with_lower_bound(mut self, phi_lower: f64) -> Self {
        self.phi_lower_hint = Some(phi_lower);
        self
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(PbfError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.h.contains(x) {
            return Err(PbfError::OutsideDomain);
        }
        Ok(())
    }

    /// `φ(x)`, `+∞` outside `dom h`.
    pub fn phi(&self, x: &[f64]) -> f64 {
        let hv = self.h.eval(x);
        if hv.is_infinite() {
            return f64::INFINITY;
        }
        self.f.value(x) + hv
    }

    /// `φ(u) + (mu/2)‖u − z‖²`.
    pub fn phi_reg(&self, u: &[f64], z: &[f64], mu: f64) -> f64 {
        self.phi(u) + 0.5 * mu * linalg::dist_sq(u, z)
    }

    /// `f_m(u; z) = f(u) + (m/2)‖u − z‖²`.
    pub fn f_m(&self, u: &[f64], z: &[f64]) -> f64 {
        self.f.value(u) + 0.5 * self.m * linalg::dist_sq(u, z)
    }
}

/// The affine function `u ↦ value_at_base + ⟨slope, u − base_point⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    pub base_point: Vec<f64>,
    pub value_at_base: f64,
    pub slope: Vec<f64>,
}

impl Linearization {
    pub fn eval(&self, u: &[f64]) -> f64 {
        self.value_at_base + linalg::dot_diff(&self.slope, u, &self.base_point)
    }

    /// The same affine function expressed with base point `z`.
    pub fn rebased(&self, z: &[f64]) -> Linearization {
        Linearization {
            base_point: z.to_vec(),
            value_at_base: self.eval(z),
            slope: self.slope.clone(),
        }
    }
}

/// `ℓ_f(·; x) = f(x) + ⟨f′(x), · − x⟩`.
pub fn linearize(problem: &Problem, x: &[f64]) -> Result<Linearization> {
    problem.check_point(x)?;
    let (value, slope) = problem.f.value_and_subgradient(x);
    Ok(Linearization {
        base_point: x.to_vec(),
        value_at_base: value,
        slope,
    })
}

/// Linearization of `f_m(·; z)` at `z̃`: value `f(z̃) + (m/2)‖z̃ − z‖²`,
/// slope `f′(z̃) + m(z̃ − z)`.
pub fn regularized_linearize(problem: &Problem, z: &[f64], z_tilde: &[f64]) -> Result<Linearization> {
    let lin = linearize(problem, z_tilde)?;
    Ok(regularize(&lin, z, problem.m))
}

/// Turn `ℓ_f(·; z̃)` into `ℓ_{f_m(·; z)}(·; z̃)` without another oracle call.
pub fn regularize(lin: &Linearization, z: &[f64], m: f64) -> Linearization {
    let diff = linalg::sub(&lin.base_point, z);
    Linearization {
        base_point: lin.base_point.clone(),
        value_at_base: lin.value_at_base + 0.5 * m * linalg::norm_sq(&diff),
        slope: linalg::add_scaled(&lin.slope, m, &diff),
    }
}

/// Outcome of a sampling check of a declared inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest `lhs − rhs` seen (negative when every sample passes with room).
    pub max_excess: f64,
}

impl SamplingReport {
    pub(crate) fn new() -> Self {
        Self {
            samples: 0,
            violations: 0,
            max_excess: f64::NEG_INFINITY,
        }
    }

    pub(crate) fn record(&mut self, excess: f64, slack: f64) {
        self.samples += 1;
        self.max_excess = self.max_excess.max(excess);
        if excess > slack {
            self.violations += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Samples pairs in `dom h` near `center` and checks
/// `‖f′(u) − f′(v)‖ ≤ 2M + L‖u − v‖` with slack `1e-9·(1 + ‖u − v‖)`.
pub fn check_hybrid_condition(
    problem: &Problem,
    center: &[f64],
    radius: f64,
    samples: usize,
    seed: u64,
) -> SamplingReport {
    let mut rng = SeededRng::new(seed);
    let mut report = SamplingReport::new();
    for _ in 0..samples {
        let u = problem.h.sample_near(&mut rng, center, radius);
        let v = problem.h.sample_near(&mut rng, center, radius);
        let d = linalg::dist(&u, &v);
        let gd = linalg::dist(&problem.f.subgradient(&u), &problem.f.subgradient(&v));
        let rhs = 2.0 * problem.big_m + problem.lip * d;
        report.record(gd - rhs, 1e-9 * (1.0 + d));
    }
    report
}

/// Samples pairs and checks `f(y) ≥ f(x) + ⟨f′(x), y − x⟩ − (m/2)‖y − x‖²`.
pub fn check_weak_convexity(
    problem: &Problem,
    center: &[f64],
    radius: f64,
    samples: usize,
    seed: u64,
) -> SamplingReport {
    let mut rng = SeededRng::new(seed);
    let mut report = SamplingReport::new();
    for _ in 0..samples {
        let x = problem.h.sample_near(&mut rng, center, radius);
        let y = problem.h.sample_near(&mut rng, center, radius);
        let (fx, gx) = problem.f.value_and_subgradient(&x);
        let fy = problem.f.value(&y);
        let rhs = fx + linalg::dot_diff(&gx, &y, &x) - 0.5 * problem.m * linalg::dist_sq(&y, &x);
        report.record(rhs - fy, 1e-9 * (1.0 + fy.abs().max(fx.abs())));
    }
    report
}
