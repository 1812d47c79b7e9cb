// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! Worst-case iteration counts for PBF.

use serde::{Deserialize, Serialize};

use super::params::PbfParams;
use crate::error::{PbfError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityBudget {
    /// `M̂^λ(x̂₀) − φ*` (with `φ*` replaced by the supplied lower bound).
    pub initial_gap: f64,
    /// Bound `K` on the number of serious steps.
    pub k_serious: u64,
    pub zeta: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Uniform bound `t̄` on the first gap of every cycle.
    pub t_bar: f64,
    /// Bound on a cycle's length: `(1/(1−τ))·log⁺(2t̄/δ) + 2`.
    pub cycle_bound: f64,
    /// Total-iteration bound as a real number.
    pub total: f64,
    /// `⌈total⌉`, saturating at `u64::MAX`.
    pub total_int: u64,
}

/// `max{log x, 0}`
pub fn log_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}

/// `ζ = 1/(2(L+m)λ)` when `λ > 1/(2(L+m))`, else `1`.
pub fn zeta(lambda: f64, lip: f64, m: f64) -> f64 {
    let thr = 1.0 / (2.0 * (lip + m));
    if lambda > thr {
        1.0 / (2.0 * (lip + m) * lambda)
    } else {
        1.0
    }
}

/// `β₁ = (m + 2/(ζλ))/(m + χ/λ)`.
pub fn beta1(zeta: f64, lambda: f64, m: f64, chi: f64) -> f64 {
    (m + 2.0 / (zeta * lambda)) / (m + chi / lambda)
}

/// `β₂ = ((L+m)/2 + 1)·ζ⁻²·(1/(4ζλ) + m/2)⁻¹`.
pub fn beta2(zeta: f64, lambda: f64, lip: f64, m: f64) -> f64 {
    (0.5 * (lip + m) + 1.0) / (zeta * zeta) / (1.0 / (4.0 * zeta * lambda) + 0.5 * m)
}

/// Serious-step factor `max{2(1−χ)/(αε̄), N/(λη̄²)}`.
pub fn serious_factor(p: &PbfParams) -> f64 {
    let a = 2.0 * (1.0 - p.chi) / (p.alpha * p.eps_bar);
    let b = p.n_const / (p.lambda * p.eta_bar * p.eta_bar);
    a.max(b)
}

/// Compute `K`, `t̄` and the total-iteration bound.
///
/// `moreau_at_x0` is `M̂^λ(x̂₀)` or any upper bound on it such as `φ(x̂₀)`;
/// `phi_lower` is a lower bound on `φ*`.
pub fn complexity_budget(params: &PbfParams, moreau_at_x0: f64, phi_lower: Option<f64>) -> Result<ComplexityBudget> {
    let phi_lower = phi_lower.ok_or(PbfError::MissingLowerBound)?;
    let gap = (moreau_at_x0 - phi_lower).max(0.0);
    let p = params;
    let factor = serious_factor(p);
    let k_real = (gap * factor).ceil();
    let k_serious = to_u64(k_real);

    let z = zeta(p.lambda, p.lip, p.m);
    let b1 = beta1(z, p.lambda, p.m, p.chi);
    let b2 = beta2(z, p.lambda, p.lip, p.m);
    let m2 = p.big_m * p.big_m;
    let t_bar = m2
        + b2 * (b1 * gap + b1 * (3.0 + p.m * p.lambda) * k_real * p.delta + 4.0 * z * p.lambda * m2);

    let cycle_bound = p.inv_one_minus_tau() * log_plus(2.0 * t_bar / p.delta) + 2.0;
    let total = cycle_bound * (gap * factor + 1.0);
    Ok(ComplexityBudget {
        initial_gap: gap,
        k_serious,
        zeta: z,
        beta1: b1,
        beta2: b2,
        t_bar,
        cycle_bound,
        total,
        total_int: to_u64(total.ceil()),
    })
}

fn to_u64(x: f64) -> u64 {
    if x >= u64::MAX as f64 {
        u64::MAX
    } else if x <= 0.0 {
        0
    } else {
        x as u64
    }
}
