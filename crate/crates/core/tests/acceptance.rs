// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria 1 to 8. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::sync::Arc;
use std::time::Instant;

use pbf::baseline_ps::{averaged_bound_audit, ps_iteration_count, ps_run, PsParams};
use pbf::bundle::{Cut, Scheme};
use pbf::harness::config::{InstanceSpec, OutputSpec, Overrides, RunConfig, SolverKind, ToleranceSpec};
use pbf::harness::execute_on;
use pbf::linalg;
use pbf::oracles::{FnOracle, Problem};
use pbf::pbf::params::{tau, tau_ratio};
use pbf::pbf::{
    derive_params, run, AuditMode, NullSink, PbfReport, RunOptions, SeriousRecord, Tolerances,
};
use pbf::problems::{gen_convex_qp, gen_hybrid_synthetic, gen_phase_retrieval, GeneratorParams, Instance, PhaseDomain};
use pbf::proxstep::{solve_cut_prox, solve_dual_simplex, CutProx};
use pbf::rng::SeededRng;
use pbf::simple_terms::SimpleTerm;
use pbf::stationarity::{
    default_moreau_tol, moreau_oracle, regularized_to_moreau_bound, verify_regularized, RegularizedCert,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn unit_problem(m: f64, big_m: f64, lip: f64) -> Problem {
    let f = Arc::new(FnOracle::new(1, |x| x[0].abs(), |x| vec![x[0].signum()]));
    Problem::new(f, SimpleTerm::zero(1), m, big_m, lip).unwrap().with_lower_bound(0.0)
}

fn criterion_1() -> Outcome {
    let p = unit_problem(1.0, 1.0, 0.0);
    let q = derive_params(&p, Tolerances::new(0.1, 0.01).map_err(|e| e.to_string())?, Some(1.0), None)
        .map_err(|e| e.to_string())?;
    ensure(q.alpha == 2.0 && q.n_const == 16.0 && q.chi == 1.0, || {
        format!("α = {}, N = {}", q.alpha, q.n_const)
    })?;
    // the η̄ branch is active: 0.1² / (8 + 16·4) = 1/7200 ≈ 1.3889e−4
    ensure(rel(q.delta, 1.3889e-4) <= 1e-4, || format!("δ = {:e}", q.delta))?;
    let delta_exact = 1.0 / 7200.0;
    ensure(rel(q.delta, delta_exact) <= 1e-9, || format!("δ = {:e}, want 1/7200", q.delta))?;

    // τ/(1 − τ) = 41 exactly, τ = 41/42 to the last bit
    let r = tau_ratio(1.0, 1.0, 0.0, 1.0, 0.1);
    let t = tau(1.0, 1.0, 0.0, 1.0, 0.1);
    ensure(r == 41.0 && t == 41.0 / 42.0, || format!("τ/(1−τ) = {r}, τ = {t}"))?;

    let mut worst = 0.0_f64;
    for (rho, m) in [(1.0, 1.0), (0.5, 19.0), (0.25, 3.7), (1e-3, 1e-6)] {
        let tol = Tolerances::from_rho(rho, m).map_err(|e| e.to_string())?;
        let mut w = vec![0.0; 3];
        w[1] = tol.eta_bar;
        let cert = RegularizedCert {
            x: vec![0.0; 3],
            w,
            eps: tol.eps_bar,
            m,
        };
        worst = worst.max(rel(regularized_to_moreau_bound(&cert), rho));
    }
    ensure(worst <= 1e-12, || format!("preset bound off by {worst:e} rel"))?;
    Ok(format!("α = 2, N = 16, δ = {:.4e}, τ = 41/42, preset bound rel err {worst:.1e}", q.delta))
}

fn random_term(rng: &mut SeededRng, dim: usize, which: usize) -> SimpleTerm {
    match which % 4 {
        0 => SimpleTerm::zero(dim),
        1 => SimpleTerm::l1(rng.uniform_in(0.05, 1.0), dim).unwrap(),
        2 => SimpleTerm::boxed(vec![-rng.uniform_in(0.2, 1.0); dim], vec![rng.uniform_in(0.2, 1.0); dim]).unwrap(),
        _ => SimpleTerm::ball(rng.normal_vec(dim), rng.uniform_in(0.3, 1.5)).unwrap(),
    }
}

fn subproblem_objective(cuts: &[Cut], h: &SimpleTerm, c: &[f64], lambda: f64, u: &[f64]) -> f64 {
    let model = cuts.iter().map(|k| k.eval(c, u)).fold(f64::NEG_INFINITY, f64::max);
    model + h.eval(u) + linalg::dist_sq(u, c) / (2.0 * lambda)
}

/// Grid minimizer in the square of half-width `half` around `center`, and
/// whether it sits on the square's edge.
fn grid_window(obj: &dyn Fn(&[f64]) -> f64, center: [f64; 2], half: f64, step: f64) -> ([f64; 2], bool) {
    let n = (half / step).round() as i64;
    let mut best = (center, f64::INFINITY, false);
    for i in -n..=n {
        for j in -n..=n {
            let u = [center[0] + i as f64 * step, center[1] + j as f64 * step];
            let v = obj(&u);
            if v < best.1 {
                best = (u, v, i.abs() == n || j.abs() == n);
            }
        }
    }
    (best.0, best.2)
}

/// Grid search for a convex objective: one coarse pass over `[c ± reach]²`,
/// then windows at steps 1e−3 and 1e−4, each recentered until its minimizer is
/// interior (a convex function decreasing past the edge would put it there).
fn grid_argmin(obj: &dyn Fn(&[f64]) -> f64, c: [f64; 2], reach: f64) -> [f64; 2] {
    let (mut best, _) = grid_window(obj, c, reach, 1e-2);
    for (half, step) in [(0.3, 1e-3), (0.03, 1e-4)] {
        for _ in 0..1000 {
            let (b, edge) = grid_window(obj, best, half, step);
            best = b;
            if !edge {
                break;
            }
        }
    }
    best
}

fn h_nonsmooth_at(h: &SimpleTerm, x: &[f64]) -> bool {
    let tiny = 1e-9;
    match h {
        SimpleTerm::Zero { .. } => false,
        SimpleTerm::L1 { .. } => x.iter().any(|v| v.abs() <= tiny),
        SimpleTerm::Box { lower, upper } => x
            .iter()
            .zip(lower.iter().zip(upper))
            .any(|(v, (l, u))| (v - l).abs() <= tiny || (v - u).abs() <= tiny),
        SimpleTerm::Ball { center, radius } => (linalg::dist(x, center) - radius).abs() <= tiny,
    }
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let mut rng = SeededRng::new(2);
    let mut worst_single = 0.0_f64;
    for trial in 0..100 {
        let dim = 1 + (rng.next_u64() % 50) as usize;
        let h = random_term(&mut rng, dim, trial);
        let c = h.project(&rng.normal_vec(dim));
        let g = rng.normal_vec(dim);
        let cuts = [Cut {
            id: 0,
            value_at_center: rng.normal(),
            slope: g.clone(),
        }];
        let lambda = rng.uniform_in(0.05, 3.0);
        let p = CutProx {
            cuts: &cuts,
            h: &h,
            center: &c,
            lambda,
        };
        let sol = solve_dual_simplex(p, 1e-14, None).map_err(|e| format!("trial {trial}: {e}"))?;
        let shifted: Vec<f64> = c.iter().zip(&g).map(|(ci, gi)| ci - lambda * gi).collect();
        let closed = h.prox(lambda, &shifted);
        worst_single = worst_single.max(linalg::dist(&sol.x, &closed));
    }
    ensure(worst_single <= 1e-9, || format!("single-cut ‖Δx‖ = {worst_single:e}"))?;

    let mut worst_grid = 0.0_f64;
    let (mut far, mut kinks, mut solver_lower) = (0, 0, 0);
    for trial in 0..20 {
        let h = random_term(&mut rng, 2, trial);
        let c = h.project(&rng.in_box(&[0.0, 0.0], 0.5));
        let k = 2 + trial % 2;
        let cuts: Vec<Cut> = (0..k)
            .map(|i| Cut {
                id: i as u64,
                value_at_center: 0.5 * rng.normal(),
                slope: rng.normal_vec(2),
            })
            .collect();
        let lambda = rng.uniform_in(0.2, 2.0);
        let p = CutProx {
            cuts: &cuts,
            h: &h,
            center: &c,
            lambda,
        };
        let sol = solve_cut_prox(p, 1e-13, None).map_err(|e| format!("grid trial {trial}: {e}"))?;
        let obj = |u: &[f64]| subproblem_objective(&cuts, &h, &c, lambda, u);
        // x = prox_{λh}(c − λΣw_i g_i) with c ∈ dom h, so ‖x − c‖ ≤ λ(max‖g_i‖ + ‖∂h‖)
        let h_slope = match &h {
            SimpleTerm::L1 { weight, .. } => weight * 2f64.sqrt(),
            _ => 0.0,
        };
        let g_max = cuts.iter().map(|k| linalg::norm(&k.slope)).fold(0.0, f64::max);
        let g = grid_argmin(&obj, [c[0], c[1]], lambda * (g_max + h_slope) + 0.05);
        let d = linalg::dist(&sol.x, &g);
        worst_grid = worst_grid.max(d);
        if d > 2e-4 {
            far += 1;
            let vals: Vec<f64> = cuts.iter().map(|q| q.eval(&c, &sol.x)).collect();
            let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let on_kink = vals.iter().filter(|v| top - **v <= 1e-9).count() >= 2 || h_nonsmooth_at(&h, &sol.x);
            kinks += on_kink as usize;
        }
        solver_lower += (obj(&sol.x) <= obj(&g)) as usize;
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(worst_grid <= 2e-4, || {
        format!(
            "grid minimizer farther than 2e-4 on {far}/20 instances (max {worst_grid:.2e}; {kinks} of them with \
             the minimizer on a kink of the cut model or of h); solver objective ≤ grid minimum on {solver_lower}/20; \
             single-cut max ‖Δx‖ = {worst_single:.1e}; {secs:.1} s"
        )
    })?;
    ensure(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "single-cut max ‖Δx‖ = {worst_single:.1e}, grid max distance = {worst_grid:.1e}, {secs:.1} s"
    ))
}

const PHASE_N: usize = 50;
const DIM: usize = 10;

fn phase_instance(seed: u64) -> Instance {
    gen_phase_retrieval(PHASE_N, DIM, seed, 0.0, PhaseDomain::default()).unwrap()
}

fn solve(inst: &Instance, rho: f64, scheme: Scheme, cap: Option<u64>) -> pbf::error::Result<PbfReport> {
    let problem = &inst.problem;
    let params = derive_params(problem, Tolerances::from_rho(rho, problem.m)?, None, None)?;
    let x0 = inst.x0();
    let moreau = moreau_oracle(problem, params.lambda, x0, default_moreau_tol(x0))
        .map(|c| c.value)
        .unwrap_or_else(|_| problem.phi(x0));
    let opts = RunOptions {
        max_total_iters: cap,
        moreau_at_x0: Some(moreau),
        audit_mode: AuditMode::Warn,
        ..RunOptions::with_scheme(scheme)
    };
    run(problem, &params, &opts, x0, &mut NullSink)
}

/// Iteration cap for the single- and two-cut runs of the audit suite.
const AUDIT_SUITE_CAP: u64 = 100_000;

fn criterion_3(certs: &mut Vec<(Instance, SeriousRecord)>) -> Outcome {
    let started = Instant::now();
    let schemes = [Scheme::OneCut, Scheme::TwoCut, Scheme::multi_default()];
    let mut iters = 0u64;
    let mut converged = 0;
    let mut failures = Vec::new();
    for i in 0..20u64 {
        let inst = if i < 10 {
            phase_instance(100 + i)
        } else {
            gen_hybrid_synthetic(DIM, 100 + i, 1.0, 5).unwrap()
        };
        let scheme = schemes[(i % 3) as usize];
        let cap = (!matches!(scheme, Scheme::MultiCut { .. })).then_some(AUDIT_SUITE_CAP);
        let rep = solve(&inst, 1.0, scheme, cap).map_err(|e| format!("run {i}: {e}"))?;
        for c in &rep.audit.checks {
            if !c.applicable {
                failures.push(format!("run {i}: {} inapplicable", c.kind.name()));
            }
        }
        if !rep.audit.passed() {
            failures.push(format!(
                "run {i} ({}): {} violations",
                scheme.name(),
                rep.audit.total_violations()
            ));
        }
        iters += rep.iterations;
        if rep.converged() {
            converged += 1;
            certs.push((inst, rep.terminal.clone().unwrap()));
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(failures.is_empty(), || failures.join("; "))?;
    ensure(secs < 300.0, || format!("took {secs:.0} s"))?;
    Ok(format!(
        "20 runs, {iters} audited iterations, 0 violations, {converged} converged, {secs:.1} s"
    ))
}

fn criterion_4(certs: &[(Instance, SeriousRecord)]) -> Outcome {
    let mut worst_ratio = 0.0_f64;
    let mut samples = 0;
    for (i, (inst, rec)) in certs.iter().enumerate() {
        let p = &inst.problem;
        let cert = RegularizedCert::from_record(rec, p.m);
        let rep = verify_regularized(p, &cert, 10_000, 40 + i as u64, 1e-8);
        ensure(rep.passed(), || {
            format!("{}: {} sampled violations, max excess {:e}", inst.name(), rep.violations, rep.max_excess)
        })?;
        samples += rep.samples;
        let bound = regularized_to_moreau_bound(&cert);
        let mc = moreau_oracle(p, 1.0 / p.m, &cert.x, default_moreau_tol(&cert.x)).map_err(|e| e.to_string())?;
        ensure(mc.grad_norm <= 1.05 * bound, || {
            format!("{}: ‖∇M̂‖ = {:e} > 1.05 × {:e}", inst.name(), mc.grad_norm, bound)
        })?;
        worst_ratio = worst_ratio.max(mc.grad_norm / bound);
    }
    ensure(!certs.is_empty(), || "no terminal certificates".into())?;
    Ok(format!(
        "{} certificates, {samples} samples, max measured/bound = {worst_ratio:.2e}",
        certs.len()
    ))
}

fn criterion_5(certs: &mut Vec<(Instance, SeriousRecord)>) -> Outcome {
    let mut notes = Vec::new();
    for rho in [1.0, 0.5, 0.25] {
        let started = Instant::now();
        let inst = phase_instance(1);
        ensure(inst.known_phi_star_lower() == 0.0, || "lower bound is not 0".into())?;
        let rep = solve(&inst, rho, Scheme::multi_default(), None).map_err(|e| e.to_string())?;
        let budget = rep.budget.ok_or("no budget")?;
        ensure(rep.converged(), || format!("ρ = {rho}: {:?}", rep.status))?;
        ensure(rep.iterations <= budget.total_int, || {
            format!("ρ = {rho}: {} iterations > budget {}", rep.iterations, budget.total_int)
        })?;
        let rec = rep.terminal.clone().unwrap();
        let p = &inst.problem;
        let mc = moreau_oracle(p, 1.0 / p.m, &rec.y_hat, default_moreau_tol(&rec.y_hat)).map_err(|e| e.to_string())?;
        ensure(mc.grad_norm + mc.grad_error() <= rho, || {
            format!("ρ = {rho}: ‖∇M̂‖ = {:e}", mc.grad_norm)
        })?;
        let secs = started.elapsed().as_secs_f64();
        ensure(secs < 600.0, || format!("ρ = {rho} took {secs:.0} s"))?;
        notes.push(format!(
            "ρ={rho}: {} its (budget {:.1e}), ‖∇M̂‖={:.1e}",
            rep.iterations, budget.total, mc.grad_norm
        ));
        certs.push((inst, rec));
    }
    Ok(notes.join("; "))
}

fn criterion_6() -> Outcome {
    let pin = ps_iteration_count(&unit_problem(1.0, 1.0, 0.0), 0.5, 0.5, 1.0).map_err(|e| e.to_string())?;
    ensure(pin == 256, || format!("T = {pin}, want 256"))?;

    let inst = gen_phase_retrieval(20, 3, 6, 0.0, PhaseDomain::default()).unwrap();
    let p = &inst.problem;
    ensure(p.lip == 0.0 && p.dim() <= 5, || "instance is not L = 0, dim ≤ 5".into())?;
    let mut notes = vec![format!("T pin = {pin}")];
    for t in [50, 200] {
        let params = PsParams::new(p, 0.5 / p.m, t).map_err(|e| e.to_string())?;
        let r = ps_run(p, &params, inst.x0(), &mut NullSink).map_err(|e| e.to_string())?;
        let a = averaged_bound_audit(p, &r, default_moreau_tol(inst.x0())).map_err(|e| e.to_string())?;
        ensure(a.applicable && a.passed, || format!("T = {t}: lhs {:e} vs rhs {:e}", a.lhs, a.rhs))?;
        notes.push(format!("T={t}: {:.2e} ≤ {:.2e}", a.lhs, a.rhs));
    }
    Ok(notes.join(", "))
}

fn criterion_7() -> Outcome {
    let mut worst_dist = 0.0_f64;
    for seed in 1..=3 {
        let inst = gen_convex_qp(5, seed, 1e-6).unwrap();
        let p = &inst.problem;
        let x_star = inst.file.planted.clone().ok_or("no minimizer")?;
        let phi_star = p.phi(&x_star);
        let params = derive_params(p, Tolerances::new(1e-6, 1e-6).unwrap(), None, None).map_err(|e| e.to_string())?;
        let opts = RunOptions {
            moreau_at_x0: Some(p.phi(inst.x0())),
            ..RunOptions::default()
        };
        let rep = run(p, &params, &opts, inst.x0(), &mut NullSink).map_err(|e| e.to_string())?;
        ensure(rep.converged(), || format!("seed {seed}: {:?}", rep.status))?;
        let rec = rep.terminal.unwrap();
        let d = linalg::dist(&rec.y_hat, &x_star);
        let gap = p.phi(&rec.y_hat) - phi_star;
        let bound = rec.eps_hat + params.eta_bar * d;
        ensure(gap <= bound, || format!("seed {seed}: φ(ŷ) − φ* = {gap:e} > {bound:e}"))?;
        ensure(d < 1e-3, || format!("seed {seed}: ‖ŷ − x*‖ = {d:e}"))?;
        worst_dist = worst_dist.max(d);
    }
    Ok(format!("3 QPs, max ‖ŷ − x*‖ = {worst_dist:.1e}"))
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for solver in [SolverKind::PbfOnecut, SolverKind::PbfTwocut, SolverKind::PbfMulticut, SolverKind::Ps] {
        let cfg = RunConfig {
            solver,
            seed: 8,
            instance: InstanceSpec {
                path: None,
                generate: Some(GeneratorParams::PhaseRetrieval {
                    n_samples: 30,
                    dim: 5,
                    noise: 0.0,
                    domain: PhaseDomain::default(),
                }),
            },
            tolerance: ToleranceSpec {
                rho: Some(1.0),
                ..Default::default()
            },
            overrides: Overrides {
                max_total_iters: Some(20_000),
                ps_iters: Some(2_000),
                ..Default::default()
            },
            output: OutputSpec::default(),
        };
        let mut traces = Vec::new();
        for rep in 0..2 {
            let inst = cfg.load_instance().map_err(|e| e.to_string())?;
            let out = dir.path().join(format!("{}-{rep}", solver.name()));
            let o = execute_on(&cfg, &inst, &out).map_err(|e| e.to_string())?;
            traces.push(std::fs::read(o.trace_path).map_err(|e| e.to_string())?);
        }
        ensure(traces[0] == traces[1], || format!("{} traces differ", solver.name()))?;
        ensure(traces[0].len() > 1000, || format!("{} trace is nearly empty", solver.name()))?;
        compared += 1;
    }
    Ok(format!("{compared} solvers, traces byte-identical"))
}

fn main() {
    let mut certs = Vec::new();
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let mut report = |n: u32, o: Outcome| {
        match &o {
            Ok(msg) => println!("[criterion {n}] PASS: {msg}"),
            Err(msg) => println!("[criterion {n}] FAIL: {msg}"),
        }
        results.push((n, o));
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3(&mut certs));
    // criterion 5 adds its certificates to the set checked by criterion 4
    let c5 = criterion_5(&mut certs);
    report(4, criterion_4(&certs));
    report(5, c5);
    report(6, criterion_6());
    report(7, criterion_7());
    report(8, criterion_8());
    let failed: Vec<u32> = results.iter().filter(|(_, o)| o.is_err()).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        println!("acceptance: all 8 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
