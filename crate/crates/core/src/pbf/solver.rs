// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::audit::{AuditContext, AuditMode, AuditReport, Auditor};
use super::budget::{complexity_budget, ComplexityBudget};
use super::params::PbfParams;
use super::trace::{TraceRow, TraceSink};
use crate::bundle::{BundleModel, ResetPolicy, Scheme};
use crate::error::Result;
use crate::linalg;
use crate::oracles::{regularize, Linearization, Problem};

/// Cap on total iterations when no budget can be computed.
pub const FALLBACK_MAX_ITERS: u64 = 1_000_000;
/// Default duality-gap target for the subproblem solver.
pub const DEFAULT_SUBPROBLEM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub scheme: Scheme,
    pub reset: ResetPolicy,
    pub subproblem_tol: f64,
    pub audit_mode: AuditMode,
    /// Overrides the default cap of twice the complexity budget.
    pub max_total_iters: Option<u64>,
    /// `M̂^λ(x̂₀)` if known; `φ(x̂₀)` is used otherwise.
    pub moreau_at_x0: Option<f64>,
    /// Adds a wall-clock column (breaks byte-identical traces).
    pub wall_time: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::multi_default(),
            reset: ResetPolicy::default(),
            subproblem_tol: DEFAULT_SUBPROBLEM_TOL,
            audit_mode: AuditMode::Warn,
            max_total_iters: None,
            moreau_at_x0: None,
            wall_time: false,
        }
    }
}

impl RunOptions {
    pub fn with_scheme(scheme: Scheme) -> Self {
        Self {
            scheme,
            ..Self::default()
        }
    }
}

/// Quantities computed at a serious step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriousRecord {
    pub k: u64,
    pub j: u64,
    pub x_hat_prev: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub y_hat: Vec<f64>,
    pub v_hat: Vec<f64>,
    pub w_hat: Vec<f64>,
    pub eps_hat: f64,
    /// `Δ_k = φ_m̃(ŷ_k; x̂_{k−1})`
    pub delta_k: f64,
    pub phi_y: f64,
}

impl SeriousRecord {
    pub fn w_norm(&self) -> f64 {
        linalg::norm(&self.w_hat)
    }

    /// `max{‖ŵ‖/η̄, ε̂/ε̄}`; at most 1 exactly when the stopping test holds.
    pub fn score(&self, eta_bar: f64, eps_bar: f64) -> f64 {
        (self.w_norm() / eta_bar).max(self.eps_hat / eps_bar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    BudgetExhausted,
    AuditFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PbfReport {
    pub status: RunStatus,
    /// The last serious record; the certificate when converged.
    pub terminal: Option<SeriousRecord>,
    /// Serious record with the smallest [`SeriousRecord::score`].
    pub best: Option<SeriousRecord>,
    pub iterations: u64,
    pub serious_steps: u64,
    pub null_steps: u64,
    pub oracle_calls: u64,
    pub longest_cycle: u64,
    pub max_total_iters: u64,
    pub budget: Option<ComplexityBudget>,
    pub params: PbfParams,
    pub audit: AuditReport,
}

impl PbfReport {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

/// Default iteration cap: twice the budget, or [`FALLBACK_MAX_ITERS`].
pub fn default_max_iters(budget: Option<&ComplexityBudget>) -> u64 {
    budget.map_or(FALLBACK_MAX_ITERS, |b| b.total_int.saturating_mul(2))
}

struct Evaluated {
    lin: Linearization,
    phi: f64,
}

fn evaluate(problem: &Problem, x: &[f64]) -> Evaluated {
    let (value, slope) = problem.f.value_and_subgradient(x);
    Evaluated {
        phi: value + problem.h.eval(x),
        lin: Linearization {
            base_point: x.to_vec(),
            value_at_base: value,
            slope,
        },
    }
}

/// Run PBF from `x0`, streaming one row per iteration into `sink`.
pub fn run(
    problem: &Problem,
    params: &PbfParams,
    options: &RunOptions,
    x0: &[f64],
    sink: &mut dyn TraceSink,
) -> Result<PbfReport> {
    problem.check_point(x0)?;
    let started = options.wall_time.then(Instant::now);
    let lam = params.lambda;
    let m = problem.m;
    let m_tilde = params.m_tilde;

    let first = evaluate(problem, x0);
    let mut oracle_calls = 1u64;
    let moreau0 = options.moreau_at_x0.unwrap_or(first.phi);
    let budget = complexity_budget(params, moreau0, problem.phi_lower_hint).ok();
    let max_iters = options.max_total_iters.unwrap_or_else(|| default_max_iters(budget.as_ref()));
    let mut auditor = Auditor::new(AuditContext::new(params, budget.as_ref()));

    let mut model = BundleModel::new(options.scheme, problem.h.clone(), &first.lin)?;
    let mut center = x0.to_vec();
    let mut y = x0.to_vec();
    let mut phi_y = first.phi;

    let mut k = 1u64;
    let mut cycle_start = 1u64;
    let mut t_first = f64::NAN;
    let mut serious_steps = 0u64;
    let mut longest_cycle = 0u64;
    let mut terminal: Option<SeriousRecord> = None;
    let mut best: Option<SeriousRecord> = None;
    let mut status = RunStatus::BudgetExhausted;
    let mut j = 0u64;

    while j < max_iters {
        j += 1;
        let n_cuts = model.len();
        let sol = model.solve(lam, options.subproblem_tol)?;
        let x = &sol.x;
        let ev = evaluate(problem, x);
        oracle_calls += 1;

        // y_j: best of {x_j, y_{j−1}} for φ_m̃(·; x̂_{k−1}); ties go to x_j
        let reg_x = ev.phi + 0.5 * m_tilde * linalg::dist_sq(x, &center);
        let reg_y = phi_y + 0.5 * m_tilde * linalg::dist_sq(&y, &center);
        let reg_best = if reg_x <= reg_y {
            y.clone_from(x);
            phi_y = ev.phi;
            reg_x
        } else {
            reg_y
        };
        let t = reg_best - sol.theta;
        if j == cycle_start {
            t_first = t;
        }
        let mut row = TraceRow {
            j,
            k: Some(k),
            serious: Some(t <= params.delta),
            t: Some(t),
            theta: Some(sol.theta),
            delta: Some(params.delta),
            step_norm: linalg::dist(x, &center),
            phi: phi_y,
            n_cuts: Some(n_cuts),
            sub_gap: Some(sol.gap),
            wall_ms: started.map(|s| s.elapsed().as_secs_f64() * 1e3),
            ..TraceRow::default()
        };

        if t > params.delta {
            let cut = regularize(&ev.lin, &center, m);
            model.null_update(&sol, &cut, params.tau)?;
            sink.record(&row)?;
            if auditor.observe(&row) && options.audit_mode == AuditMode::Fail {
                status = RunStatus::AuditFailed;
                break;
            }
            continue;
        }

        // serious step
        serious_steps += 1;
        let x_hat = x.clone();
        let v_hat = linalg::scale(1.0 / lam, &linalg::sub(&center, &x_hat));
        let w_hat: Vec<f64> = v_hat
            .iter()
            .zip(y.iter().zip(&center))
            .map(|(v, (yi, ci))| v - m * (yi - ci))
            .collect();
        let phi_m_y = phi_y + 0.5 * m * linalg::dist_sq(&y, &center);
        let eps_hat = phi_m_y - sol.model_value - linalg::dot_diff(&v_hat, &y, &x_hat);
        let cycle_len = j - cycle_start + 1;
        longest_cycle = longest_cycle.max(cycle_len);
        let rec = SeriousRecord {
            k,
            j,
            x_hat_prev: center.clone(),
            x_hat: x_hat.clone(),
            y_hat: y.clone(),
            v_hat,
            w_hat,
            eps_hat,
            delta_k: reg_best,
            phi_y,
        };
        row.eps_hat = Some(eps_hat);
        row.w_norm = Some(rec.w_norm());
        row.delta_k = Some(reg_best);
        row.cycle_len = Some(cycle_len);
        row.t_first = Some(t_first);
        row.dist_y_xhat = Some(linalg::dist(&y, &x_hat));
        row.dist_y_prev = Some(linalg::dist(&y, &center));
        row.x_hat_prev = Some(rec.x_hat_prev.clone());
        row.x_hat = Some(rec.x_hat.clone());
        row.y_hat = Some(rec.y_hat.clone());
        row.v_hat = Some(rec.v_hat.clone());
        row.w_hat = Some(rec.w_hat.clone());
        sink.record(&row)?;
        let violated = auditor.observe(&row);

        let done = rec.w_norm() <= params.eta_bar && eps_hat <= params.eps_bar;
        let better = best
            .as_ref()
            .is_none_or(|b| rec.score(params.eta_bar, params.eps_bar) < b.score(params.eta_bar, params.eps_bar));
        if better {
            best = Some(rec.clone());
        }
        terminal = Some(rec);
        if violated && options.audit_mode == AuditMode::Fail {
            status = RunStatus::AuditFailed;
            break;
        }
        if done {
            status = RunStatus::Converged;
            break;
        }
        model.serious_reset(&x_hat, &ev.lin, options.reset, m, &sol);
        center = x_hat;
        k += 1;
        cycle_start = j + 1;
    }

    Ok(PbfReport {
        status,
        terminal,
        best,
        iterations: j,
        serious_steps,
        null_steps: j - serious_steps,
        oracle_calls,
        longest_cycle,
        max_total_iters: max_iters,
        budget,
        params: *params,
        audit: auditor.report(),
    })
}
