// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! Execute one configured run and write its trace, summary and audit files.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, SolverKind};
use super::trace_csv::{fmt_f64, CsvTraceSink};
use crate::baseline_ps::{averaged_bound_audit, ps_best_moreau, ps_iteration_count, ps_run, PsParams, PS_AUDIT_SLACK};
use crate::error::{PbfError, Result};
use crate::oracles::{Problem, SamplingReport};
use crate::pbf::{
    complexity_budget, derive_params, run, AuditContext, AuditMode, AuditReport, ComplexityBudget, PbfParams,
    RunOptions, RunStatus, SeriousRecord,
};
use crate::problems::Instance;
use crate::stationarity::{
    default_moreau_tol, moreau_oracle, regularized_directional_bounds, regularized_to_directional,
    regularized_to_moreau_bound, verify_directional, verify_regularized, DirectionalCheck, RegularizedCert,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MALFORMED: i32 = 1;
pub const EXIT_AUDIT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Default largest PS iteration count whose averaged bound is audited.
pub const DEFAULT_PS_AUDIT_MAX_ITERS: u64 = 2000;
/// Number of iterates sampled for the PS best-envelope-gradient estimate.
const PS_MOREAU_SAMPLES: u64 = 50;

/// `(ŷ, ŵ, ε̂)` of the terminal (or best) serious step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub k: u64,
    pub j: u64,
    pub y_hat: Vec<f64>,
    pub w_hat: Vec<f64>,
    pub w_norm: f64,
    pub eps_hat: f64,
    pub phi: f64,
    /// `‖ŵ‖ ≤ η̄` and `ε̂ ≤ ε̄`.
    pub meets_tolerance: bool,
}

/// Bounds implied by the regularized certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conversions {
    /// `18√(2mε̂) + 4‖ŵ‖ ≥ ‖∇M̂^{1/m}(ŷ)‖`
    pub moreau_bound: f64,
    pub directional_eps_d: f64,
    pub directional_delta_d: f64,
    /// `ε_M` of the directional certificate with `λ = 1/m`.
    pub directional_to_moreau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    /// Measured `‖∇M̂^{1/m}(ŷ)‖`.
    pub moreau_grad_norm: f64,
    pub moreau_grad_error: f64,
    pub moreau_within_bound: bool,
    /// Sampled `ε`-subgradient inequality of the certificate.
    pub inclusion: SamplingReport,
    pub directional: Option<DirectionalCheck>,
    pub witness_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsSummary {
    pub params: PsParams,
    pub step: f64,
    /// `T` from the iteration-count rule, before any cap.
    pub planned_iters: Option<u64>,
    pub final_phi: f64,
    /// Iterate index with the smallest measured envelope gradient.
    pub best_index: Option<usize>,
    pub averaged_bound_lhs: Option<f64>,
    pub averaged_bound_rhs: Option<f64>,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub solver: SolverKind,
    pub instance: String,
    pub seed: u64,
    pub status: String,
    pub exit_code: i32,
    pub iterations: u64,
    pub serious_steps: Option<u64>,
    pub null_steps: Option<u64>,
    pub oracle_calls: u64,
    pub longest_cycle: Option<u64>,
    pub max_total_iters: u64,
    /// Iteration budget: PBF's worst-case total, or PS's `T + 1`.
    pub budget_total: Option<u64>,
    pub budget: Option<ComplexityBudget>,
    pub moreau_at_x0: Option<f64>,
    pub params: Option<PbfParams>,
    pub certificate: Option<CertificateSummary>,
    pub conversions: Option<Conversions>,
    pub verification: Option<Verification>,
    pub ps: Option<PsSummary>,
    /// Measured `‖∇M̂^{1/m}‖` at the output point (`None` unless verified).
    pub measured_moreau: Option<f64>,
    pub audit_passed: bool,
}

/// One line of the audit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditLine {
    pub check: String,
    /// `pass`, `fail`, `inapplicable (…)` or `skipped (…)`.
    pub status: String,
    pub evaluated: u64,
    pub violations: u64,
    pub worst_excess: Option<f64>,
    pub first_violation: Option<String>,
}

/// Contents of `audit.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub solver: SolverKind,
    pub mode: AuditMode,
    pub passed: bool,
    pub checks: Vec<AuditLine>,
}

impl AuditSummary {
    pub fn from_report(solver: SolverKind, mode: AuditMode, report: &AuditReport) -> Self {
        let checks = report
            .checks
            .iter()
            .map(|c| AuditLine {
                check: c.kind.name().to_string(),
                status: if !c.applicable {
                    "inapplicable (no budget)".into()
                } else if c.violations == 0 {
                    "pass".into()
                } else {
                    "fail".into()
                },
                evaluated: c.evaluated,
                violations: c.violations,
                worst_excess: c.worst_excess.is_finite().then_some(c.worst_excess),
                first_violation: c.first_violation.clone(),
            })
            .collect();
        Self {
            solver,
            mode,
            passed: report.passed(),
            checks,
        }
    }

    /// Plain-text table, one check per line.
    pub fn render(&self) -> String {
        let mode = match self.mode {
            AuditMode::Warn => "warn",
            AuditMode::Fail => "fail",
        };
        let mut s = format!("audit ({}, {mode} mode)\n", self.solver.name());
        for c in &self.checks {
            s += &format!(
                "  {:<22} {:<36} evaluated {:>8}  violations {}\n",
                c.check, c.status, c.evaluated, c.violations
            );
        }
        s += if self.passed { "PASS\n" } else { "FAIL\n" };
        s
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    pub audit: AuditSummary,
    pub exit_code: i32,
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
    pub audit_path: PathBuf,
}

pub fn exit_code_for(status: RunStatus, audit_passed: bool) -> i32 {
    match status {
        RunStatus::AuditFailed => EXIT_AUDIT,
        _ if !audit_passed => EXIT_AUDIT,
        RunStatus::BudgetExhausted => EXIT_BUDGET,
        RunStatus::Converged => EXIT_OK,
    }
}

fn status_name(status: RunStatus) -> &'static str {
    match status {
        RunStatus::Converged => "converged",
        RunStatus::BudgetExhausted => "budget-exhausted",
        RunStatus::AuditFailed => "audit-failed",
    }
}

/// Run `cfg`, writing into its output directory.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let instance = cfg.load_instance()?;
    execute_on(cfg, &instance, &cfg.output_dir())
}

/// Run `cfg` on an already loaded instance, writing into `out_dir`.
pub fn execute_on(cfg: &RunConfig, instance: &Instance, out_dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let trace_path = out_dir.join(&cfg.output.trace);
    let summary_path = out_dir.join(&cfg.output.summary);
    let audit_path = out_dir.join(&cfg.output.audit);
    let (summary, audit) = match cfg.solver {
        SolverKind::Ps => run_ps(cfg, instance, &trace_path)?,
        _ => run_pbf(cfg, instance, &trace_path)?,
    };
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)? + "\n")?;
    std::fs::write(&audit_path, serde_json::to_string_pretty(&audit)? + "\n")?;
    Ok(RunOutcome {
        exit_code: summary.exit_code,
        summary,
        audit,
        trace_path,
        summary_path,
        audit_path,
    })
}

fn moreau_tol(cfg: &RunConfig, x: &[f64]) -> f64 {
    cfg.overrides.moreau_tol.unwrap_or_else(|| default_moreau_tol(x))
}

/// `PbfParams` from the tolerance spec and overrides.
pub fn pbf_params(cfg: &RunConfig, problem: &Problem) -> Result<PbfParams> {
    let tol = cfg.tolerance.resolve(problem.m)?;
    let lambda = cfg.overrides.lambda;
    let gamma = cfg.overrides.chi.map(|chi| {
        let lam = lambda.unwrap_or(1.0 / problem.m);
        chi * (2.0 + problem.m * lam) - 1.0
    });
    derive_params(problem, tol, lambda, gamma)
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn run_pbf(cfg: &RunConfig, instance: &Instance, trace_path: &Path) -> Result<(Summary, AuditSummary)> {
    let problem = &instance.problem;
    let x0 = instance.x0();
    let params = pbf_params(cfg, problem)?;
    let o = &cfg.overrides;
    let scheme = cfg.solver.scheme(o.max_cuts).expect("pbf solver");
    // the envelope value at x̂₀ tightens the budget; φ(x̂₀) majorizes it
    let (moreau_at_x0, moreau_source) = match moreau_oracle(problem, params.lambda, x0, moreau_tol(cfg, x0)) {
        Ok(c) => (c.value, "envelope"),
        Err(_) => (problem.phi(x0), "phi"),
    };
    let budget = complexity_budget(&params, moreau_at_x0, problem.phi_lower_hint).ok();
    let options = RunOptions {
        scheme,
        reset: o.reset.unwrap_or_default(),
        subproblem_tol: o.subproblem_tol.unwrap_or(crate::pbf::solver::DEFAULT_SUBPROBLEM_TOL),
        audit_mode: o.audit.unwrap_or_default(),
        max_total_iters: o.max_total_iters,
        moreau_at_x0: Some(moreau_at_x0),
        wall_time: cfg.output.wall_time,
    };
    let cap = o
        .max_total_iters
        .unwrap_or_else(|| crate::pbf::solver::default_max_iters(budget.as_ref()));
    let ctx = AuditContext::new(&params, budget.as_ref());
    let mut header = vec![
        kv("solver", cfg.solver.name()),
        kv("instance", instance.name()),
        kv("instance_seed", instance.seed()),
        kv("seed", cfg.seed),
        kv("scheme", serde_json::to_string(&scheme)?),
        kv("reset", serde_json::to_string(&options.reset)?),
        kv("m", fmt_f64(params.m)),
        kv("M", fmt_f64(params.big_m)),
        kv("L", fmt_f64(params.lip)),
        kv("lambda", fmt_f64(params.lambda)),
        kv("chi", fmt_f64(params.chi)),
        kv("tau", fmt_f64(params.tau)),
        kv("delta", fmt_f64(params.delta)),
        kv("eta_bar", fmt_f64(params.eta_bar)),
        kv("eps_bar", fmt_f64(params.eps_bar)),
        kv("m_tilde", fmt_f64(params.m_tilde)),
        kv("alpha", fmt_f64(params.alpha)),
        kv("N", fmt_f64(params.n_const)),
        kv("subproblem_tol", fmt_f64(options.subproblem_tol)),
        kv("audit_mode", serde_json::to_string(&options.audit_mode)?),
        kv("max_total_iters", cap),
        kv("moreau_at_x0", fmt_f64(moreau_at_x0)),
        kv("moreau_at_x0_source", moreau_source),
    ];
    if let Some(b) = &budget {
        header.push(kv("budget_total", b.total_int));
        header.push(kv("k_bound", b.k_serious));
        header.push(kv("t_bar", fmt_f64(b.t_bar)));
    }
    header.push(kv("audit_context", serde_json::to_string(&ctx)?));

    let file = BufWriter::new(File::create(trace_path)?);
    let mut sink = CsvTraceSink::new(file, &header)?;
    let report = run(problem, &params, &options, x0, &mut sink)?;
    sink.finish()?;

    let audit_passed = report.audit.passed();
    let exit_code = exit_code_for(report.status, audit_passed);
    let rec: Option<&SeriousRecord> = if report.converged() {
        report.terminal.as_ref()
    } else {
        report.best.as_ref()
    };
    let mut certificate = None;
    let mut conversions = None;
    let mut verification = None;
    let mut measured = None;
    if let Some(rec) = rec {
        let cert = RegularizedCert::from_record(rec, problem.m);
        let (eps_d, delta_d) = regularized_directional_bounds(&cert);
        let lam = 1.0 / problem.m;
        let moreau_bound = regularized_to_moreau_bound(&cert);
        certificate = Some(CertificateSummary {
            k: rec.k,
            j: rec.j,
            y_hat: rec.y_hat.clone(),
            w_hat: rec.w_hat.clone(),
            w_norm: rec.w_norm(),
            eps_hat: rec.eps_hat,
            phi: rec.phi_y,
            meets_tolerance: rec.w_norm() <= params.eta_bar && rec.eps_hat <= params.eps_bar,
        });
        conversions = Some(Conversions {
            moreau_bound,
            directional_eps_d: eps_d,
            directional_delta_d: delta_d,
            directional_to_moreau: (problem.m + 1.0 / lam) * ((3.0 + 2.0 * lam * problem.m) * delta_d + 2.0 * lam * eps_d),
        });
        if cfg.output.verify_moreau {
            let tol = moreau_tol(cfg, &cert.x);
            let mc = moreau_oracle(problem, lam, &cert.x, tol)?;
            let inclusion = verify_regularized(problem, &cert, cfg.output.certificate_samples, cfg.seed, 1e-8);
            let (directional, witness_error) = match regularized_to_directional(problem, &cert, tol) {
                Ok(d) => (
                    Some(verify_directional(problem, &d, cfg.output.certificate_samples, cfg.seed)),
                    Some(d.witness_error),
                ),
                Err(_) => (None, None),
            };
            measured = Some(mc.grad_norm);
            verification = Some(Verification {
                moreau_grad_norm: mc.grad_norm,
                moreau_grad_error: mc.grad_error(),
                moreau_within_bound: mc.grad_norm <= moreau_bound * (1.0 + PS_AUDIT_SLACK),
                inclusion,
                directional,
                witness_error,
            });
        }
    }
    let summary = Summary {
        solver: cfg.solver,
        instance: instance.name().to_string(),
        seed: cfg.seed,
        status: status_name(report.status).into(),
        exit_code,
        iterations: report.iterations,
        serious_steps: Some(report.serious_steps),
        null_steps: Some(report.null_steps),
        oracle_calls: report.oracle_calls,
        longest_cycle: Some(report.longest_cycle),
        max_total_iters: report.max_total_iters,
        budget_total: budget.map(|b| b.total_int),
        budget,
        moreau_at_x0: Some(moreau_at_x0),
        params: Some(params),
        certificate,
        conversions,
        verification,
        ps: None,
        measured_moreau: measured,
        audit_passed,
    };
    let audit = AuditSummary::from_report(cfg.solver, options.audit_mode, &report.audit);
    Ok((summary, audit))
}

fn run_ps(cfg: &RunConfig, instance: &Instance, trace_path: &Path) -> Result<(Summary, AuditSummary)> {
    let problem = &instance.problem;
    let x0 = instance.x0();
    let o = &cfg.overrides;
    let m = problem.m;
    let gamma = o.ps_gamma.unwrap_or(0.5 / m);
    let moreau_at_x0 = match moreau_oracle(problem, 1.0 / m, x0, moreau_tol(cfg, x0)) {
        Ok(c) => c.value,
        Err(_) => problem.phi(x0),
    };
    let planned = match (o.ps_iters, cfg.tolerance.rho) {
        (Some(t), _) => t,
        (None, Some(rho)) => ps_iteration_count(problem, rho, gamma, moreau_at_x0)?,
        (None, None) => return Err(PbfError::Malformed("ps needs `rho` or `overrides.ps_iters`".into())),
    };
    let cap = o.max_total_iters.unwrap_or(crate::pbf::solver::FALLBACK_MAX_ITERS);
    let truncated = planned.saturating_add(1) > cap;
    let t_count = if truncated { cap.saturating_sub(1) } else { planned };
    let params = match o.ps_m_bar {
        Some(mb) => PsParams::with_m_bar(problem, gamma, t_count, mb)?,
        None => PsParams::new(problem, gamma, t_count)?,
    };
    let header = vec![
        kv("solver", cfg.solver.name()),
        kv("instance", instance.name()),
        kv("instance_seed", instance.seed()),
        kv("seed", cfg.seed),
        kv("m", fmt_f64(m)),
        kv("M", fmt_f64(problem.big_m)),
        kv("L", fmt_f64(problem.lip)),
        kv("gamma", fmt_f64(gamma)),
        kv("T", t_count),
        kv("planned_T", planned),
        kv("m_bar", fmt_f64(params.m_bar)),
        kv("step", fmt_f64(params.step())),
        kv("moreau_at_x0", fmt_f64(moreau_at_x0)),
    ];
    let file = BufWriter::new(File::create(trace_path)?);
    let mut sink = CsvTraceSink::new(file, &header)?;
    let psr = ps_run(problem, &params, x0, &mut sink)?;
    sink.finish()?;

    let audit_max = o.ps_audit_max_iters.unwrap_or(DEFAULT_PS_AUDIT_MAX_ITERS);
    let mut line = AuditLine {
        check: "averaged-bound".into(),
        status: String::new(),
        evaluated: 0,
        violations: 0,
        worst_excess: None,
        first_violation: None,
    };
    let mut lhs_rhs = (None, None);
    if problem.lip > 0.0 {
        line.status = "inapplicable (L>0)".into();
    } else if t_count + 1 > audit_max {
        line.status = format!("skipped (T+1 > {audit_max})");
    } else {
        let a = averaged_bound_audit(problem, &psr, moreau_tol(cfg, x0))?;
        line.evaluated = t_count + 1;
        line.worst_excess = Some(a.lhs - (1.0 + PS_AUDIT_SLACK) * a.rhs);
        lhs_rhs = (Some(a.lhs), Some(a.rhs));
        if a.passed {
            line.status = "pass".into();
        } else {
            line.status = "fail".into();
            line.violations = 1;
            line.first_violation = Some(format!("lhs {:e} > (1 + slack)·rhs {:e}", a.lhs, a.rhs));
        }
    }
    let audit_passed = line.violations == 0;
    let audit = AuditSummary {
        solver: cfg.solver,
        mode: o.audit.unwrap_or_default(),
        passed: audit_passed,
        checks: vec![line],
    };

    let (best_index, measured) = if cfg.output.verify_moreau {
        let stride = ((t_count + 1) / PS_MOREAU_SAMPLES).max(1) as usize;
        let (t, g, _) = ps_best_moreau(problem, &psr, stride, moreau_tol(cfg, x0))?;
        (Some(t), Some(g))
    } else {
        (None, None)
    };
    let exit_code = if !audit_passed {
        EXIT_AUDIT
    } else if truncated {
        EXIT_BUDGET
    } else {
        EXIT_OK
    };
    let summary = Summary {
        solver: cfg.solver,
        instance: instance.name().to_string(),
        seed: cfg.seed,
        status: if truncated { "budget-exhausted" } else { "completed" }.into(),
        exit_code,
        iterations: t_count + 1,
        serious_steps: None,
        null_steps: None,
        oracle_calls: psr.oracle_calls,
        longest_cycle: None,
        max_total_iters: cap,
        budget_total: Some(planned.saturating_add(1)),
        budget: None,
        moreau_at_x0: Some(moreau_at_x0),
        params: None,
        certificate: None,
        conversions: None,
        verification: None,
        ps: Some(PsSummary {
            params,
            step: params.step(),
            planned_iters: Some(planned),
            final_phi: *psr.phi.last().expect("at least one iterate"),
            best_index,
            averaged_bound_lhs: lhs_rhs.0,
            averaged_bound_rhs: lhs_rhs.1,
        }),
        measured_moreau: measured,
        audit_passed,
    };
    Ok((summary, audit))
}
