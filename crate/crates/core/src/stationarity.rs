// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! Stationarity certificates and the conversions between them.
//!
//! Three notions are used:
//!
//! * regularized: `w ∈ ∂_ε[φ_m(·; x)](x)` with `‖w‖`, `ε` small (what PBF emits);
//! * directional: a witness `x̃` near `x` with `dist(0, ∂φ(x̃))` small;
//! * Moreau: `‖∇M̂^λ(x)‖` small, where
//!   `M̂^λ(x) = min_u φ(u) + ((1/λ + m)/2)‖u − x‖²`.
//!
//! [`moreau_oracle`] evaluates the envelope numerically with a certified
//! error so the conversions can be checked against measured values.

use serde::{Deserialize, Serialize};

use crate::bundle::{BundleModel, Scheme};
use crate::error::{PbfError, Result};
use crate::linalg;
use crate::oracles::{regularize, Linearization, Problem, SamplingReport};
use crate::pbf::SeriousRecord;
use crate::rng::SeededRng;

/// Iteration cap for the inner envelope solve.
pub const MAX_INNER_ITERS: usize = 5000;
/// Cut cap for the inner envelope solve.
pub const INNER_MAX_CUTS: usize = 200;

/// `w ∈ ∂_ε[φ_m(·; x)](x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizedCert {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub eps: f64,
    pub m: f64,
}

impl RegularizedCert {
    /// Certificate `(ŷ_k, ŵ_k, ε̂_k)` of a serious step.
    pub fn from_record(rec: &SeriousRecord, m: f64) -> Self {
        Self {
            x: rec.y_hat.clone(),
            w: rec.w_hat.clone(),
            eps: rec.eps_hat,
            m,
        }
    }

    pub fn w_norm(&self) -> f64 {
        linalg::norm(&self.w)
    }
}

/// Witness `x̃` with `‖x − x̃‖ ≤ δ_D` and `subgrad ∈ ∂φ(x̃)`, `‖subgrad‖ ≤ ε_D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalCert {
    pub x: Vec<f64>,
    pub x_tilde: Vec<f64>,
    pub eps_d: f64,
    pub delta_d: f64,
    /// The exhibited subgradient at `x̃`.
    pub subgrad: Vec<f64>,
    /// Certified distance from `x̃` to the exact witness (0 when exact).
    pub witness_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoreauCert {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub m: f64,
    /// `(1/λ + m)‖x − x̂‖`
    pub grad_norm: f64,
    /// Approximate envelope minimizer `x̂^λ(x)`.
    pub x_hat: Vec<f64>,
    /// `M̂^λ(x)` up to `value_gap`.
    pub value: f64,
    /// Objective gap certified at `x_hat`.
    pub value_gap: f64,
    /// Certified bound on `‖x_hat − x̂^λ(x)‖`.
    pub dist_error: f64,
    pub inner_iters: usize,
}

impl MoreauCert {
    /// `1/λ + m`
    pub fn mu(&self) -> f64 {
        1.0 / self.lambda + self.m
    }

    /// Bound on the error of `grad_norm`.
    pub fn grad_error(&self) -> f64 {
        self.mu() * self.dist_error
    }
}

/// Approximate minimizer of `φ(u) + ((1/λ + m)/2)‖u − z‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxPointSolution {
    pub u: Vec<f64>,
    pub value: f64,
    /// Certified lower bound on the optimal value.
    pub lower: f64,
    /// `√(2λ(value − lower))`, a bound on the distance to the minimizer.
    pub dist_error: f64,
    pub iters: usize,
}

/// Relative accuracy requested from each bundle subproblem of the inner solve.
const INNER_SUB_TOL: f64 = 1e-14;
const STALL_ITERS: usize = 25;
const INNER_DUAL_STEPS: usize = 2000;

/// Minimize `ψ(u) = φ(u) + ((1/λ + m)/2)‖u − z‖²` by bundle iterations on
/// the convex `f_m(·; z)` with a fixed prox center.
///
/// `ψ` is `(1/λ)`-strongly convex, which gives two distance certificates for
/// a candidate `u`: `√(2λ(ψ(u) − lower))`, where any dual value of the bundle
/// subproblem is a valid `lower`, and `λ‖s‖` for an exact `s ∈ ∂ψ(u)` built
/// from the oracle subgradient and the least-norm element of `∂h(u)`.
///
/// The value certificate cannot go below `√(2λ·4g)`, where `g` is the larger
/// of `10⁻¹⁴(1 + |ψ|)`, the accuracy asked of each subproblem, and the worst
/// gap of a subproblem that missed it. Below that floor the solve also stops
/// after `STALL_ITERS` iterations without a better certificate, and the
/// returned `dist_error` may exceed `tol`.
pub fn solve_prox_point(problem: &Problem, z: &[f64], lambda: f64, tol: f64) -> Result<ProxPointSolution> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(PbfError::invalid("λ must be finite and > 0"));
    }
    if z.len() != problem.dim() {
        return Err(PbfError::DimensionMismatch {
            expected: problem.dim(),
            got: z.len(),
        });
    }
    let m = problem.m;
    let mu = 1.0 / lambda + m;
    // ψ(u) and the subgradient certificate λ‖s‖
    let eval = |u: &[f64]| -> Result<(f64, f64, Linearization)> {
        let (value, slope) = problem.f.value_and_subgradient(u);
        let psi = value + problem.h.eval(u) + 0.5 * mu * linalg::dist_sq(u, z);
        let g: Vec<f64> = slope.iter().zip(u.iter().zip(z)).map(|(gi, (ui, zi))| gi + mu * (ui - zi)).collect();
        let s = problem.h.min_norm_shift(u, &g)?;
        let lin = Linearization {
            base_point: u.to_vec(),
            value_at_base: value,
            slope,
        };
        Ok((psi, lambda * linalg::norm(&s), lin))
    };

    let u0 = problem.h.project(z);
    let (psi0, cert0, lin0) = eval(&u0)?;
    // best by value, and best by subgradient certificate
    let (mut best_u, mut best, mut best_cert) = (u0.clone(), psi0, cert0);
    let (mut sub_u, mut sub_val, mut sub_cert) = (u0, psi0, cert0);
    let mut lower = f64::NEG_INFINITY;
    // z may lie outside dom h; cuts are affine so only the anchor changes
    let mut model = BundleModel::new(
        Scheme::MultiCut {
            max_cuts: Some(INNER_MAX_CUTS),
        },
        problem.h.clone(),
        &regularize(&lin0, z, m).rebased(z),
    )?;

    let mut dist = f64::INFINITY;
    let mut stall = 0;
    // largest gap of a subproblem that missed its target
    let mut reached = 0.0_f64;
    for it in 0..=MAX_INNER_ITERS {
        let by_value = (2.0 * lambda * (best - lower).max(0.0)).sqrt().min(best_cert);
        let by_sub = sub_cert.min((2.0 * lambda * (sub_val - lower).max(0.0)).sqrt());
        let next = by_value.min(by_sub);
        stall = if next < dist { 0 } else { stall + 1 };
        dist = next;
        let floor = (2.0 * lambda * 4.0 * reached.max(INNER_SUB_TOL * (1.0 + best.abs()))).sqrt();
        if dist <= tol || (dist <= floor && stall >= STALL_ITERS) {
            let (u, value) = if by_value <= by_sub { (best_u, best) } else { (sub_u, sub_val) };
            return Ok(ProxPointSolution {
                u,
                value,
                lower,
                dist_error: dist,
                iters: it,
            });
        }
        if it == MAX_INNER_ITERS {
            break;
        }
        // any dual weights bound ψ* from below, so an unfinished solve is usable
        let (sol, ok) = model.solve_capped(lambda, INNER_SUB_TOL * (1.0 + best.abs()), INNER_DUAL_STEPS)?;
        if !ok {
            reached = reached.max(sol.gap);
        }
        lower = lower.max(sol.dual_value);
        let (val, cert, lin) = eval(&sol.x)?;
        if val < best {
            best = val;
            best_cert = cert;
            best_u = sol.x.clone();
        }
        if cert < sub_cert {
            sub_cert = cert;
            sub_val = val;
            sub_u = sol.x.clone();
        }
        match model.null_update(&sol, &regularize(&lin, z, m), 0.0) {
            // an unfinished subproblem whose point the dual weights do not describe
            Err(PbfError::DegenerateActiveSet) if !ok => break,
            r => r?,
        }
    }
    Err(PbfError::MoreauNotConverged { achieved: dist, tol })
}

/// Default envelope tolerance `1e-8·(1 + ‖x‖)`.
pub fn default_moreau_tol(x: &[f64]) -> f64 {
    1e-8 * (1.0 + linalg::norm(x))
}

/// Evaluate `M̂^λ(x)` and `‖∇M̂^λ(x)‖ = (1/λ + m)‖x − x̂^λ(x)‖`.
pub fn moreau_oracle(problem: &Problem, lambda: f64, x: &[f64], tol: f64) -> Result<MoreauCert> {
    let s = solve_prox_point(problem, x, lambda, tol)?;
    let mu = 1.0 / lambda + problem.m;
    Ok(MoreauCert {
        x: x.to_vec(),
        lambda,
        m: problem.m,
        grad_norm: mu * linalg::dist(x, &s.u),
        x_hat: s.u,
        value: s.value,
        value_gap: s.value - s.lower,
        dist_error: s.dist_error,
        inner_iters: s.iters,
    })
}

/// `‖∇M̂^{1/m}(x)‖ ≤ 18√(2mε) + 4‖w‖`.
pub fn regularized_to_moreau_bound(cert: &RegularizedCert) -> f64 {
    18.0 * (2.0 * cert.m * cert.eps.max(0.0)).sqrt() + 4.0 * cert.w_norm()
}

/// `ε_D = ‖w‖ + 2√(2mε)`, `δ_D = √(2ε/m)`.
pub fn regularized_directional_bounds(cert: &RegularizedCert) -> (f64, f64) {
    let eps = cert.eps.max(0.0);
    (cert.w_norm() + 2.0 * (2.0 * cert.m * eps).sqrt(), (2.0 * eps / cert.m).sqrt())
}

/// Build the directional witness of a regularized certificate.
///
/// `x̃` minimizes `φ_{2m}(·; x) − ⟨w, ·⟩ = φ(u) + m‖u − (x + w/(2m))‖² + const`,
/// and the exhibited subgradient is `w − 2m(x̃ − x) ∈ ∂φ(x̃)`.
pub fn regularized_to_directional(problem: &Problem, cert: &RegularizedCert, inner_tol: f64) -> Result<DirectionalCert> {
    if !(cert.m > 0.0) {
        return Err(PbfError::invalid("conversion needs m > 0"));
    }
    let (eps_d, delta_d) = regularized_directional_bounds(cert);
    let m = cert.m;
    let (x_tilde, err) = if cert.eps <= 0.0 {
        // w is an exact subgradient of φ_{2m}(·; x) at x, which is then the minimizer
        (cert.x.clone(), 0.0)
    } else {
        let z = linalg::add_scaled(&cert.x, 0.5 / m, &cert.w);
        // ((1/λ) + m)/2 = m with λ = 1/m
        let s = solve_prox_point(&with_m(problem, m), &z, 1.0 / m, inner_tol)?;
        (s.u, s.dist_error)
    };
    let subgrad: Vec<f64> = cert
        .w
        .iter()
        .zip(x_tilde.iter().zip(&cert.x))
        .map(|(wi, (t, x))| wi - 2.0 * m * (t - x))
        .collect();
    Ok(DirectionalCert {
        x: cert.x.clone(),
        x_tilde,
        eps_d,
        delta_d,
        subgrad,
        witness_error: err,
    })
}

fn with_m(problem: &Problem, m: f64) -> Problem {
    let mut p = problem.clone();
    p.m = m;
    p
}

/// `ε_M = (m + 1/λ)[(3 + 2λm)δ_D + 2λε_D]`.
pub fn directional_to_moreau(cert: &DirectionalCert, lambda: f64, m: f64) -> f64 {
    (m + 1.0 / lambda) * ((3.0 + 2.0 * lambda * m) * cert.delta_d + 2.0 * lambda * cert.eps_d)
}

/// `ε_D = ‖∇M̂^λ(x)‖`, `δ_D = ε_D/(m + 1/λ)`, witness `x̂^λ(x)`.
pub fn moreau_to_directional(cert: &MoreauCert) -> DirectionalCert {
    let mu = cert.mu();
    DirectionalCert {
        x: cert.x.clone(),
        x_tilde: cert.x_hat.clone(),
        eps_d: cert.grad_norm,
        delta_d: cert.grad_norm / mu,
        subgrad: linalg::scale(mu, &linalg::sub(&cert.x, &cert.x_hat)),
        witness_error: cert.dist_error,
    }
}

/// Sampling box radius `max(1, 2‖x‖)`.
pub fn sampling_radius(x: &[f64]) -> f64 {
    (2.0 * linalg::norm(x)).max(1.0)
}

/// Check `φ_m(u; x) ≥ φ(x) + ⟨w, u − x⟩ − ε` at `samples` points of `dom h`
/// near `x`, with slack `slack·(1 + |φ_m(u; x)|)`.
pub fn verify_regularized(problem: &Problem, cert: &RegularizedCert, samples: usize, seed: u64, slack: f64) -> SamplingReport {
    let mut rng = SeededRng::new(seed);
    let radius = sampling_radius(&cert.x);
    let phi_x = problem.phi(&cert.x);
    let mut report = SamplingReport::new();
    for _ in 0..samples {
        let u = problem.h.sample_near(&mut rng, &cert.x, radius);
        let lhs = problem.phi_reg(&u, &cert.x, cert.m);
        let rhs = phi_x + linalg::dot_diff(&cert.w, &u, &cert.x) - cert.eps;
        report.record(rhs - lhs, slack * (1.0 + lhs.abs()));
    }
    report
}

/// Check `g ∈ ∂_ε φ(x̃)` in the weakly convex sense,
/// `φ(u) + m‖u − x̃‖² ≥ φ(x̃) + ⟨g, u − x̃⟩ − ε`, by sampling.
pub fn verify_subgradient(
    problem: &Problem,
    x_tilde: &[f64],
    g: &[f64],
    eps: f64,
    samples: usize,
    seed: u64,
    slack: f64,
) -> SamplingReport {
    let mut rng = SeededRng::new(seed);
    let radius = sampling_radius(x_tilde);
    let phi_x = problem.phi(x_tilde);
    let mut report = SamplingReport::new();
    for _ in 0..samples {
        let u = problem.h.sample_near(&mut rng, x_tilde, radius);
        let lhs = problem.phi_reg(&u, x_tilde, 2.0 * problem.m);
        let rhs = phi_x + linalg::dot_diff(g, &u, x_tilde) - eps;
        report.record(rhs - lhs, slack * (1.0 + lhs.abs()));
    }
    report
}

/// Outcome of [`verify_directional`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalCheck {
    pub distance_ok: bool,
    pub norm_ok: bool,
    pub inclusion: SamplingReport,
}

impl DirectionalCheck {
    pub fn passed(&self) -> bool {
        self.distance_ok && self.norm_ok && self.inclusion.passed()
    }
}

/// Verify a directional certificate, allowing for the witness error `e`:
/// `‖x − x̃‖ ≤ δ_D + e`, `‖g‖ ≤ ε_D + 2me`, and `g` an approximate
/// subgradient at `x̃` (inexact by `2m·e·(radius + e)` on the sampling box).
pub fn verify_directional(problem: &Problem, cert: &DirectionalCert, samples: usize, seed: u64) -> DirectionalCheck {
    let e = cert.witness_error;
    let m = problem.m;
    let tiny = 1e-12 * (1.0 + linalg::norm(&cert.x));
    let distance_ok = linalg::dist(&cert.x, &cert.x_tilde) <= cert.delta_d + e + tiny;
    let norm_ok = linalg::norm(&cert.subgrad) <= cert.eps_d + 2.0 * m * e + 1e-12 * (1.0 + cert.eps_d);
    let radius = sampling_radius(&cert.x_tilde);
    let slack_eps = if e > 0.0 {
        // ‖g(x̃) − g(x̃*)‖ ≤ 2m e and ‖x̃ − x̃*‖ ≤ e; the inequality at x̃* transfers
        // to x̃ with this much extra room on a box of the given radius
        let g_norm = linalg::norm(&cert.subgrad) + 2.0 * m * e;
        2.0 * (g_norm + 2.0 * m * (radius + e)) * e + lipschitz_room(problem, e)
    } else {
        0.0
    };
    let inclusion = verify_subgradient(problem, &cert.x_tilde, &cert.subgrad, slack_eps, samples, seed, 1e-8);
    DirectionalCheck {
        distance_ok,
        norm_ok,
        inclusion,
    }
}

/// Bound on `|φ(x̃) − φ(x̃*)|` for `‖x̃ − x̃*‖ ≤ e` from the hybrid constants.
fn lipschitz_room(problem: &Problem, e: f64) -> f64 {
    (2.0 * problem.big_m + problem.lip * e + problem.m * e) * e
}
