// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! Deterministic proximal subgradient method with constant stepsize
//! `γ/√(T+1)`, used as a comparison baseline.

use serde::{Deserialize, Serialize};

use crate::error::{PbfError, Result};
use crate::linalg;
use crate::oracles::Problem;
use crate::pbf::trace::{TraceRow, TraceSink};
use crate::stationarity::moreau_oracle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsParams {
    /// `γ ∈ (0, 1/(2m)]`
    pub gamma: f64,
    /// Iteration count; the method performs `T + 1` steps.
    pub t_count: u64,
    /// `m̄ ∈ (m, 2m]`, used only by the averaged-bound audit.
    pub m_bar: f64,
}

impl PsParams {
    /// `m̄ = 2m`.
    pub fn new(problem: &Problem, gamma: f64, t_count: u64) -> Result<Self> {
        Self::with_m_bar(problem, gamma, t_count, 2.0 * problem.m)
    }

    pub fn with_m_bar(problem: &Problem, gamma: f64, t_count: u64, m_bar: f64) -> Result<Self> {
        let m = problem.m;
        if !(gamma > 0.0 && gamma <= 1.0 / (2.0 * m)) {
            return Err(PbfError::invalid(format!("γ must lie in (0, 1/(2m)] = (0, {}]", 0.5 / m)));
        }
        if !(m_bar > m && m_bar <= 2.0 * m) {
            return Err(PbfError::invalid("m̄ must lie in (m, 2m]"));
        }
        Ok(Self { gamma, t_count, m_bar })
    }

    /// `α_t = γ/√(T+1)` for every `t`.
    pub fn step(&self) -> f64 {
        self.gamma / ((self.t_count + 1) as f64).sqrt()
    }
}

/// `prox_{αh}(x − α f′(x))`.
pub fn ps_step(problem: &Problem, x: &[f64], alpha: f64) -> Vec<f64> {
    let g = problem.f.subgradient(x);
    problem.h.prox(alpha, &linalg::add_scaled(x, -alpha, &g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsRun {
    pub params: PsParams,
    /// `x̂_0, …, x̂_{T+1}`
    pub iterates: Vec<Vec<f64>>,
    /// `φ(x̂_t)` for every iterate.
    pub phi: Vec<f64>,
    pub oracle_calls: u64,
}

/// Run `T + 1` PS steps from `x0`.
pub fn ps_run(problem: &Problem, params: &PsParams, x0: &[f64], sink: &mut dyn TraceSink) -> Result<PsRun> {
    problem.check_point(x0)?;
    let alpha = params.step();
    let mut iterates = Vec::with_capacity(params.t_count as usize + 2);
    let mut phi = Vec::with_capacity(params.t_count as usize + 2);
    let mut x = x0.to_vec();
    for t in 0..=params.t_count {
        let next = ps_step(problem, &x, alpha);
        let row = TraceRow {
            j: t,
            step_norm: linalg::dist(&next, &x),
            phi: problem.phi(&x),
            ..TraceRow::default()
        };
        sink.record(&row)?;
        phi.push(row.phi);
        iterates.push(std::mem::replace(&mut x, next));
    }
    phi.push(problem.phi(&x));
    iterates.push(x);
    Ok(PsRun {
        params: *params,
        iterates,
        phi,
        oracle_calls: params.t_count + 1,
    })
}

/// Smallest `T` with `T ≥ [(M̂^{1/m}(x̂₀) − φ*) + 4mM²γ²]² / (γ²ρ⁴)`.
pub fn ps_iteration_count(problem: &Problem, rho: f64, gamma: f64, moreau_at_x0: f64) -> Result<u64> {
    let lower = problem.phi_lower_hint.ok_or(PbfError::MissingLowerBound)?;
    if !(rho > 0.0) {
        return Err(PbfError::invalid("ρ must be > 0"));
    }
    if !(gamma > 0.0 && gamma <= 0.5 / problem.m) {
        return Err(PbfError::invalid("γ must lie in (0, 1/(2m)]"));
    }
    let gap = (moreau_at_x0 - lower).max(0.0);
    let num = gap + 4.0 * problem.m * problem.big_m * problem.big_m * gamma * gamma;
    let t = (num * num / (gamma * gamma * rho.powi(4))).ceil();
    Ok(if t >= u64::MAX as f64 { u64::MAX } else { t as u64 })
}

/// Smallest measured `‖∇M̂^{1/m}(x̂_t)‖` over every `stride`-th iterate (the
/// last one always included). Returns `(t, grad_norm, certified error)`.
pub fn ps_best_moreau(problem: &Problem, run: &PsRun, stride: usize, moreau_tol: f64) -> Result<(usize, f64, f64)> {
    let last = run.iterates.len() - 1;
    let mut best = (last, f64::INFINITY, 0.0);
    for t in (0..=last).step_by(stride.max(1)).chain(std::iter::once(last)) {
        let c = moreau_oracle(problem, 1.0 / problem.m, &run.iterates[t], moreau_tol)?;
        if c.grad_norm < best.1 {
            best = (t, c.grad_norm, c.grad_error());
        }
    }
    Ok(best)
}

/// Result of the averaged Moreau-gradient bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsAudit {
    /// The bound assumes `L = 0`.
    pub applicable: bool,
    /// `Σα_t‖∇M̂(x̂_t)‖² / Σα_t` over `t = 0..T`.
    pub lhs: f64,
    pub rhs: f64,
    /// Largest certified error of a gradient-norm evaluation.
    pub max_grad_error: f64,
    /// Smallest measured `‖∇M̂(x̂_t)‖`.
    pub min_grad: f64,
    pub passed: bool,
}

/// Relative slack for the averaged bound (covers envelope-oracle error).
pub const PS_AUDIT_SLACK: f64 = 0.05;

/// Check the averaged bound with envelope parameter `1/(m̄ − m)` on
/// `x̂_0, …, x̂_T`, evaluating every gradient with [`moreau_oracle`].
pub fn averaged_bound_audit(problem: &Problem, run: &PsRun, moreau_tol: f64) -> Result<PsAudit> {
    let lower = problem.phi_lower_hint.ok_or(PbfError::MissingLowerBound)?;
    let p = &run.params;
    let m = problem.m;
    let lam = 1.0 / (p.m_bar - m);
    let alpha = p.step();
    let t1 = (p.t_count + 1) as f64;
    let mut sum_sq = 0.0;
    let mut max_err = 0.0_f64;
    let mut min_grad = f64::INFINITY;
    let mut m0 = f64::NAN;
    for (t, x) in run.iterates.iter().take(p.t_count as usize + 1).enumerate() {
        let c = moreau_oracle(problem, lam, x, moreau_tol)?;
        if t == 0 {
            m0 = c.value;
        }
        sum_sq += c.grad_norm * c.grad_norm;
        max_err = max_err.max(c.grad_error());
        min_grad = min_grad.min(c.grad_norm);
    }
    // equal stepsizes: the weighted average is the plain mean
    let lhs = sum_sq / t1;
    let sum_alpha = alpha * t1;
    let sum_alpha_sq = alpha * alpha * t1;
    let rhs = p.m_bar / (p.m_bar - m)
        * ((m0 - lower) + 2.0 * p.m_bar * problem.big_m * problem.big_m * sum_alpha_sq)
        / sum_alpha;
    let applicable = problem.lip == 0.0;
    Ok(PsAudit {
        applicable,
        lhs,
        rhs,
        max_grad_error: max_err,
        min_grad,
        passed: lhs <= (1.0 + PS_AUDIT_SLACK) * rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::FnOracle;
    use crate::pbf::trace::NullSink;
    use crate::simple_terms::SimpleTerm;
    use std::sync::Arc;

    fn abs() -> Problem {
        let f = Arc::new(FnOracle::new(1, |x| x[0].abs(), |x| vec![if x[0] >= 0.0 { 1.0 } else { -1.0 }]));
        Problem::new(f, SimpleTerm::zero(1), 1.0, 1.0, 0.0).unwrap().with_lower_bound(0.0)
    }

    #[test]
    fn abs_oscillates() {
        let p = abs();
        let mut x = vec![1.0];
        let mut seen = Vec::new();
        for _ in 0..4 {
            x = ps_step(&p, &x, 0.3);
            seen.push(x[0]);
        }
        let expect = [0.7, 0.4, 0.1, -0.2];
        for (a, b) in seen.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15, "{seen:?}");
        }
    }

    #[test]
    fn stationary_start_is_fixed() {
        let f = Arc::new(FnOracle::new(2, |x| 0.5 * linalg::norm_sq(x), |x| x.to_vec()));
        let p = Problem::new(f, SimpleTerm::zero(2), 1.0, 0.0, 1.0).unwrap();
        let params = PsParams::new(&p, 0.5, 10).unwrap();
        let r = ps_run(&p, &params, &[0.0, 0.0], &mut NullSink).unwrap();
        assert_eq!(r.iterates.len(), 12);
        assert!(r.iterates.iter().all(|x| x == &vec![0.0, 0.0]));
    }

    #[test]
    fn iteration_count_pinned() {
        let p = abs();
        assert_eq!(ps_iteration_count(&p, 0.5, 0.5, 1.0).unwrap(), 256);
        // ρ doubled: 16× fewer (256 → 16)
        assert_eq!(ps_iteration_count(&p, 1.0, 0.5, 1.0).unwrap(), 16);
    }

    #[test]
    fn iteration_count_with_zero_m_term() {
        let f = Arc::new(FnOracle::new(1, |x| 0.5 * x[0] * x[0], |x| vec![x[0]]));
        let p = Problem::new(f, SimpleTerm::zero(1), 2.0, 0.0, 1.0).unwrap().with_lower_bound(0.0);
        // γ = 1/(2m) = 0.25, M = 0: T = ⌈gap²·4m²/ρ⁴⌉ = ⌈9·16/1⌉
        assert_eq!(ps_iteration_count(&p, 1.0, 0.25, 3.0).unwrap(), 144);
    }

    #[test]
    fn missing_bound_and_bad_gamma() {
        let f = Arc::new(FnOracle::new(1, |x| x[0].abs(), |x| vec![x[0].signum()]));
        let p = Problem::new(f, SimpleTerm::zero(1), 1.0, 1.0, 0.0).unwrap();
        assert!(matches!(ps_iteration_count(&p, 0.5, 0.5, 1.0), Err(PbfError::MissingLowerBound)));
        assert!(PsParams::new(&p, 0.6, 10).is_err());
        assert!(PsParams::with_m_bar(&p, 0.5, 10, 1.0).is_err());
    }

    #[test]
    fn best_moreau_on_abs_is_near_zero() {
        let p = abs();
        let params = PsParams::new(&p, 0.5, 50).unwrap();
        let r = ps_run(&p, &params, &[2.0], &mut NullSink).unwrap();
        let (t, g, _) = ps_best_moreau(&p, &r, 5, 1e-9).unwrap();
        // envelope gradient of |·| with coefficient 2 is min(2|x|, 1)
        let x = r.iterates[t][0];
        assert!((g - (2.0 * x.abs()).min(1.0)).abs() < 1e-6, "{g} at {x}");
        assert!(g < 0.2);
    }

    #[test]
    fn averaged_bound_holds_on_abs() {
        let p = abs();
        let params = PsParams::new(&p, 0.5, 50).unwrap();
        let r = ps_run(&p, &params, &[2.0], &mut NullSink).unwrap();
        let a = averaged_bound_audit(&p, &r, 1e-9).unwrap();
        assert!(a.applicable);
        assert!(a.passed, "{a:?}");
    }
}
