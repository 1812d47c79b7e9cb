// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! Runtime checks of the inequalities the convergence analysis relies on.
//!
//! Every check reads scalar trace columns only, so the same [`Auditor`]
//! re-checks a CSV trace offline.

use serde::{Deserialize, Serialize};

use super::budget::ComplexityBudget;
use super::params::PbfParams;
use super::trace::TraceRow;
use crate::linalg;

/// Relative slack used by every inequality check.
pub const SLACK: f64 = 1e-8;
/// Lower limit for `ε̂_k`.
pub const EPS_FLOOR: f64 = -1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditMode {
    /// Record violations and keep going.
    #[default]
    Warn,
    /// Stop the run at the first violation.
    Fail,
}

/// Constants the checks need, detached from the problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditContext {
    pub lambda: f64,
    pub chi: f64,
    pub tau: f64,
    /// `1/(1 − τ)` computed without cancellation.
    pub inv_one_minus_tau: f64,
    pub delta: f64,
    pub m: f64,
    pub alpha: f64,
    pub n_const: f64,
    pub k_bound: Option<u64>,
    pub t_bar: Option<f64>,
}

impl AuditContext {
    pub fn new(p: &PbfParams, budget: Option<&ComplexityBudget>) -> Self {
        Self {
            lambda: p.lambda,
            chi: p.chi,
            tau: p.tau,
            inv_one_minus_tau: p.inv_one_minus_tau(),
            delta: p.delta,
            m: p.m,
            alpha: p.alpha,
            n_const: p.n_const,
            k_bound: budget.map(|b| b.k_serious),
            t_bar: budget.map(|b| b.t_bar),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    NullContraction,
    CycleLength,
    KeyEstimate,
    WEstimate,
    PotentialRecursion,
    EpsNonnegative,
    SeriousCount,
    TBar,
    CertificateIdentity,
}

impl CheckKind {
    pub const ALL: [CheckKind; 9] = [
        CheckKind::NullContraction,
        CheckKind::CycleLength,
        CheckKind::KeyEstimate,
        CheckKind::WEstimate,
        CheckKind::PotentialRecursion,
        CheckKind::EpsNonnegative,
        CheckKind::SeriousCount,
        CheckKind::TBar,
        CheckKind::CertificateIdentity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::NullContraction => "null-contraction",
            CheckKind::CycleLength => "cycle-length",
            CheckKind::KeyEstimate => "key-estimate",
            CheckKind::WEstimate => "w-estimate",
            CheckKind::PotentialRecursion => "potential-recursion",
            CheckKind::EpsNonnegative => "eps-nonnegative",
            CheckKind::SeriousCount => "serious-count",
            CheckKind::TBar => "t-bar",
            CheckKind::CertificateIdentity => "certificate-identity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub kind: CheckKind,
    pub applicable: bool,
    pub evaluated: u64,
    pub violations: u64,
    /// Largest `lhs − rhs − slack` seen (negative when every check passed).
    pub worst_excess: f64,
    pub first_violation: Option<String>,
}

impl AuditCheck {
    fn new(kind: CheckKind, applicable: bool) -> Self {
        Self {
            kind,
            applicable,
            evaluated: 0,
            violations: 0,
            worst_excess: f64::NEG_INFINITY,
            first_violation: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(AuditCheck::passed)
    }

    pub fn total_violations(&self) -> u64 {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn get(&self, kind: CheckKind) -> &AuditCheck {
        self.checks.iter().find(|c| c.kind == kind).expect("every kind is present")
    }

    /// Fold another report into this one (for multi-run summaries).
    pub fn merge(&mut self, other: &AuditReport) {
        for o in &other.checks {
            let c = self.checks.iter_mut().find(|c| c.kind == o.kind).expect("same kinds");
            c.applicable |= o.applicable;
            c.evaluated += o.evaluated;
            c.violations += o.violations;
            c.worst_excess = c.worst_excess.max(o.worst_excess);
            if c.first_violation.is_none() {
                c.first_violation = o.first_violation.clone();
            }
        }
    }
}

fn rel(q: f64) -> f64 {
    SLACK * (1.0 + q.abs())
}

/// Streaming auditor fed one trace row at a time.
#[derive(Debug, Clone)]
pub struct Auditor {
    ctx: AuditContext,
    checks: Vec<AuditCheck>,
    prev_null_t: Option<f64>,
    /// `(Δ_k, ‖ŷ_k − x̂_{k−1}‖)` of the latest serious step.
    prev_serious: Option<(f64, f64)>,
    serious: u64,
}

impl Auditor {
    pub fn new(ctx: AuditContext) -> Self {
        let checks = CheckKind::ALL
            .iter()
            .map(|&k| {
                let applicable = match k {
                    CheckKind::SeriousCount => ctx.k_bound.is_some(),
                    CheckKind::TBar => ctx.t_bar.is_some(),
                    _ => true,
                };
                AuditCheck::new(k, applicable)
            })
            .collect();
        Self {
            ctx,
            checks,
            prev_null_t: None,
            prev_serious: None,
            serious: 0,
        }
    }

    pub fn context(&self) -> &AuditContext {
        &self.ctx
    }

    /// `lhs ≤ rhs + slack`. Returns true on violation.
    fn check(&mut self, kind: CheckKind, j: u64, lhs: f64, rhs: f64, slack: f64) -> bool {
        let excess = lhs - rhs - slack;
        let c = self.checks.iter_mut().find(|c| c.kind == kind).expect("kind present");
        c.evaluated += 1;
        c.worst_excess = c.worst_excess.max(excess);
        // NaN counts as a violation.
        if !(excess <= 0.0) {
            c.violations += 1;
            if c.first_violation.is_none() {
                c.first_violation = Some(format!("j={j}: {lhs:.6e} > {rhs:.6e}"));
            }
            return true;
        }
        false
    }

    /// Feed the next row; returns whether it triggered a new violation.
    pub fn observe(&mut self, row: &TraceRow) -> bool {
        let ctx = self.ctx;
        let j = row.j;
        let mut bad = false;
        let t = row.t.unwrap_or(f64::NAN);

        if let Some(tp) = self.prev_null_t {
            let half = 0.5 * ctx.delta;
            bad |= self.check(CheckKind::NullContraction, j, t - half, ctx.tau * (tp - half), rel(tp));
        }

        if row.serious != Some(true) {
            self.prev_null_t = Some(t);
            return bad;
        }
        self.prev_null_t = None;
        self.serious += 1;

        let lam = ctx.lambda;
        let eps = row.eps_hat.unwrap_or(f64::NAN);
        let w = row.w_norm.unwrap_or(f64::NAN);
        let dk = row.delta_k.unwrap_or(f64::NAN);
        let d_new = row.dist_y_xhat.unwrap_or(f64::NAN);
        let d_prev = row.dist_y_prev.unwrap_or(f64::NAN);
        let t_first = row.t_first.unwrap_or(f64::NAN);
        let len = row.cycle_len.map(|c| c as f64).unwrap_or(f64::NAN);

        let bound = ctx.inv_one_minus_tau * crate::pbf::budget::log_plus(2.0 * t_first / ctx.delta) + 2.0;
        bad |= self.check(CheckKind::CycleLength, j, len, bound, rel(bound));

        let lhs = eps + d_new * d_new / (2.0 * lam);
        let rhs = ctx.delta + (1.0 - ctx.chi) * d_prev * d_prev / (2.0 * lam);
        bad |= self.check(CheckKind::KeyEstimate, j, lhs, rhs, rel(lhs.abs().max(rhs.abs())));

        let lhs = w * w;
        let rhs = 4.0 * ctx.delta / lam + ctx.alpha * ctx.n_const * d_prev * d_prev / (4.0 * lam * lam);
        bad |= self.check(CheckKind::WEstimate, j, lhs, rhs, rel(rhs));

        bad |= self.check(CheckKind::EpsNonnegative, j, EPS_FLOOR, eps, 0.0);

        if let Some((dk_prev, dprev_prev)) = self.prev_serious {
            let lhs = dk + ctx.alpha / (2.0 * lam) * dprev_prev * dprev_prev;
            let rhs = dk_prev + (2.0 + ctx.m * lam) * ctx.delta;
            bad |= self.check(CheckKind::PotentialRecursion, j, lhs, rhs, rel(lhs.abs().max(rhs.abs())));
        }
        self.prev_serious = Some((dk, d_prev));

        if let Some(k_bound) = ctx.k_bound {
            let s = self.serious as f64;
            bad |= self.check(CheckKind::SeriousCount, j, s, k_bound as f64, 0.0);
        }
        if let (Some(t_bar), Some(k_bound)) = (ctx.t_bar, ctx.k_bound) {
            if self.serious <= k_bound {
                bad |= self.check(CheckKind::TBar, j, t_first, t_bar, rel(t_bar));
            }
        }

        if let (Some(xp), Some(x), Some(y), Some(v), Some(wv)) =
            (&row.x_hat_prev, &row.x_hat, &row.y_hat, &row.v_hat, &row.w_hat)
        {
            bad |= self.certificate_identity(j, xp, x, y, v, wv, w);
        }
        bad
    }

    fn certificate_identity(&mut self, j: u64, xp: &[f64], x: &[f64], y: &[f64], v: &[f64], w: &[f64], w_norm: f64) -> bool {
        let lam = self.ctx.lambda;
        let m = self.ctx.m;
        let v_re = linalg::scale(1.0 / lam, &linalg::sub(xp, x));
        let w_re: Vec<f64> = v_re
            .iter()
            .zip(y.iter().zip(xp))
            .map(|(vi, (yi, pi))| vi - m * (yi - pi))
            .collect();
        let err = linalg::dist(&v_re, v)
            .max(linalg::dist(&w_re, w))
            .max((linalg::norm(w) - w_norm).abs());
        // The recomputation repeats the solver's arithmetic, so only
        // representation error is tolerated.
        let scale = linalg::norm(&v_re).max(linalg::norm(&w_re));
        self.check(CheckKind::CertificateIdentity, j, err, 0.0, rel(scale))
    }

    pub fn report(&self) -> AuditReport {
        AuditReport {
            checks: self.checks.clone(),
        }
    }
}

/// Re-check a complete trace.
pub fn check_trace<'a>(ctx: AuditContext, rows: impl IntoIterator<Item = &'a TraceRow>) -> AuditReport {
    let mut a = Auditor::new(ctx);
    for r in rows {
        a.observe(r);
    }
    a.report()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> AuditContext {
        AuditContext {
            lambda: 1.0,
            chi: 1.0,
            tau: 0.5,
            inv_one_minus_tau: 2.0,
            delta: 0.1,
            m: 1.0,
            alpha: 2.0,
            n_const: 16.0,
            k_bound: Some(2),
            t_bar: Some(10.0),
        }
    }

    fn null(j: u64, t: f64) -> TraceRow {
        TraceRow {
            j,
            k: Some(1),
            serious: Some(false),
            t: Some(t),
            ..Default::default()
        }
    }

    fn serious(j: u64, t: f64, len: u64, t_first: f64) -> TraceRow {
        TraceRow {
            j,
            k: Some(1),
            serious: Some(true),
            t: Some(t),
            eps_hat: Some(0.0),
            w_norm: Some(0.1),
            delta_k: Some(1.0),
            cycle_len: Some(len),
            t_first: Some(t_first),
            dist_y_xhat: Some(0.0),
            dist_y_prev: Some(0.1),
            ..Default::default()
        }
    }

    #[test]
    fn clean_trace_passes() {
        let rows = vec![null(1, 1.0), null(2, 0.5), serious(3, 0.05, 3, 1.0)];
        let r = check_trace(ctx(), &rows);
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.get(CheckKind::NullContraction).evaluated, 2);
    }

    #[test]
    fn contraction_violation_is_caught() {
        // 0.9 − 0.05 > 0.5·(1 − 0.05)
        let rows = vec![null(1, 1.0), serious(2, 0.9, 2, 1.0)];
        let r = check_trace(ctx(), &rows);
        assert_eq!(r.get(CheckKind::NullContraction).violations, 1);
    }

    #[test]
    fn cycle_length_violation_is_caught() {
        // bound = 2·ln(20) + 2 ≈ 7.99
        let rows = vec![serious(9, 0.0, 9, 1.0)];
        assert_eq!(check_trace(ctx(), &rows).get(CheckKind::CycleLength).violations, 1);
        let rows = vec![serious(7, 0.0, 7, 1.0)];
        assert_eq!(check_trace(ctx(), &rows).get(CheckKind::CycleLength).violations, 0);
    }

    #[test]
    fn negative_eps_and_serious_count() {
        let mut s = serious(1, 0.0, 1, 0.0);
        s.eps_hat = Some(-1e-9);
        let rows = vec![s, serious(2, 0.0, 1, 0.0), serious(3, 0.0, 1, 0.0)];
        let r = check_trace(ctx(), &rows);
        assert_eq!(r.get(CheckKind::EpsNonnegative).violations, 1);
        assert_eq!(r.get(CheckKind::SeriousCount).violations, 1);
    }

    #[test]
    fn budget_checks_inapplicable_without_budget() {
        let mut c = ctx();
        c.k_bound = None;
        c.t_bar = None;
        let r = check_trace(c, &[serious(1, 0.0, 1, 0.0)]);
        assert!(!r.get(CheckKind::SeriousCount).applicable);
        assert_eq!(r.get(CheckKind::TBar).evaluated, 0);
    }

    #[test]
    fn certificate_identity_detects_tampering() {
        let mut s = serious(1, 0.0, 1, 0.0);
        s.x_hat_prev = Some(vec![1.0, 0.0]);
        s.x_hat = Some(vec![0.5, 0.0]);
        s.y_hat = Some(vec![0.5, 0.0]);
        s.v_hat = Some(vec![0.5, 0.0]);
        // w = v − m(y − x̂_prev) = (0.5 + 0.5, 0)
        s.w_hat = Some(vec![1.0, 0.0]);
        s.w_norm = Some(1.0);
        let mut c = ctx();
        c.k_bound = None;
        let r = check_trace(c, &[s.clone()]);
        assert_eq!(r.get(CheckKind::CertificateIdentity).violations, 0);
        s.v_hat = Some(vec![0.5, 1e-6]);
        let r = check_trace(c, &[s]);
        assert_eq!(r.get(CheckKind::CertificateIdentity).violations, 1);
    }
}
