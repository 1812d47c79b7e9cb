// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{PbfError, Result};
use crate::oracles::Problem;

/// Tolerance pair `(η̄, ε̄)` for the regularized stationarity test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub eta_bar: f64,
    pub eps_bar: f64,
}

impl Tolerances {
    pub fn new(eta_bar: f64, eps_bar: f64) -> Result<Self> {
        if !(eta_bar > 0.0 && eps_bar > 0.0 && eta_bar.is_finite() && eps_bar.is_finite()) {
            return Err(PbfError::invalid("tolerances η̄ and ε̄ must be finite and > 0"));
        }
        Ok(Self { eta_bar, eps_bar })
    }

    /// `η̄ = ρ/8`, `ε̄ = ρ²/(2592 m)`: a regularized point with these
    /// tolerances is `(ρ; 1/m)`-Moreau stationary.
    pub fn from_rho(rho: f64, m: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(PbfError::invalid("ρ must be finite and > 0"));
        }
        Self::new(rho / 8.0, rho * rho / (2592.0 * m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PbfParams {
    pub lambda: f64,
    pub chi: f64,
    pub tau: f64,
    pub delta: f64,
    pub eta_bar: f64,
    pub eps_bar: f64,
    /// `m + χ/λ`
    pub m_tilde: f64,
    /// `χ(2 + mλ) − 1`
    pub alpha: f64,
    /// `8[1 − χ + (mλ + 1)²]/α`
    pub n_const: f64,
    pub m: f64,
    pub big_m: f64,
    pub lip: f64,
}

/// `α = χ(2 + mλ) − 1`.
pub fn alpha(chi: f64, m: f64, lambda: f64) -> f64 {
    chi * (2.0 + m * lambda) - 1.0
}

/// `N = 8[1 − χ + (mλ + 1)²]/α`.
pub fn n_const(chi: f64, m: f64, lambda: f64) -> f64 {
    let ml1 = m * lambda + 1.0;
    8.0 * (1.0 - chi + ml1 * ml1) / alpha(chi, m, lambda)
}

/// Cycle tolerance `δ = min{ ε̄α / (2(α + (1−χ)(3+mλ))), λη̄² / (8 + N(3+mλ)) }`.
pub fn cycle_tolerance(tol: Tolerances, chi: f64, m: f64, lambda: f64) -> f64 {
    let a = alpha(chi, m, lambda);
    let n = n_const(chi, m, lambda);
    let first = tol.eps_bar * a / (2.0 * (a + (1.0 - chi) * (3.0 + m * lambda)));
    let second = lambda * tol.eta_bar * tol.eta_bar / (8.0 + n * (3.0 + m * lambda));
    first.min(second)
}

/// `τ/(1 − τ) = λ(4M²/δ + L + m)`.
pub fn tau_ratio(lambda: f64, big_m: f64, lip: f64, m: f64, delta: f64) -> f64 {
    lambda * (4.0 * big_m * big_m / delta + lip + m)
}

/// `τ` solving the ratio equation with equality.
pub fn tau(lambda: f64, big_m: f64, lip: f64, m: f64, delta: f64) -> f64 {
    let r = tau_ratio(lambda, big_m, lip, m, delta);
    r / (1.0 + r)
}

/// `χ = (1 + γ)/(2 + mλ)`; `None` selects `γ = 1 + mλ`, i.e. `χ = 1`.
pub fn chi_from_gamma(gamma: Option<f64>, m: f64, lambda: f64) -> Result<f64> {
    let cap = 1.0 + m * lambda;
    match gamma {
        None => Ok(1.0),
        Some(g) if g > 0.0 && g <= cap * (1.0 + 1e-15) => {
            if (g - cap).abs() <= 1e-15 * cap {
                Ok(1.0)
            } else {
                Ok(((1.0 + g) / (2.0 + m * lambda)).min(1.0))
            }
        }
        Some(_) => Err(PbfError::invalid(format!("γ must lie in (0, 1 + mλ] = (0, {cap}]"))),
    }
}

/// Derive every PBF parameter from the tolerances and the problem constants.
///
/// `lambda` defaults to `1/m` and `gamma_chi` to `1 + mλ` (so `χ = 1`).
pub fn derive_params(
    problem: &Problem,
    tol: Tolerances,
    lambda: Option<f64>,
    gamma_chi: Option<f64>,
) -> Result<PbfParams> {
    let m = problem.m;
    let lambda = lambda.unwrap_or(1.0 / m);
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(PbfError::invalid("λ must be finite and > 0"));
    }
    let chi = chi_from_gamma(gamma_chi, m, lambda)?;
    let a = alpha(chi, m, lambda);
    if !(a > 0.0) || !(chi > 0.0 && chi <= 1.0) {
        return Err(PbfError::invalid("χ must lie in (0, 1] with χ(2 + mλ) − 1 > 0"));
    }
    let delta = cycle_tolerance(tol, chi, m, lambda);
    let tau = tau(lambda, problem.big_m, problem.lip, m, delta);
    // τ rounds to 1 when λ·4M²/δ exceeds 2⁵³; the ratio stays exact.
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(PbfError::invalid(format!("derived τ = {tau} is not in (0, 1)")));
    }
    Ok(PbfParams {
        lambda,
        chi,
        tau,
        delta,
        eta_bar: tol.eta_bar,
        eps_bar: tol.eps_bar,
        m_tilde: m + chi / lambda,
        alpha: a,
        n_const: n_const(chi, m, lambda),
        m,
        big_m: problem.big_m,
        lip: problem.lip,
    })
}

impl PbfParams {
    /// `τ/(1 − τ)` recomputed from the constants (avoids cancellation in `1 − τ`).
    pub fn tau_ratio(&self) -> f64 {
        tau_ratio(self.lambda, self.big_m, self.lip, self.m, self.delta)
    }

    /// `1/(1 − τ) = 1 + τ/(1 − τ)`.
    pub fn inv_one_minus_tau(&self) -> f64 {
        1.0 + self.tau_ratio()
    }
}
