// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! Exact solves of the bundle subproblem
//! `min_u max_i ℓ_i(u) + h(u) + ‖u − c‖²/(2λ)` through its dual over the simplex.
//!
//! For weights `w` the inner minimizer is `u(w) = prox_{λh}(c − λ Σ w_i g_i)`
//! and the dual gradient is `(ℓ_i(u(w)))_i`. The primal–dual gap at `w` is
//! `max_i ℓ_i(u(w)) − Σ w_i ℓ_i(u(w))`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bundle::Cut;
use crate::error::{PbfError, Result};
use crate::linalg;
use crate::simple_terms::SimpleTerm;

/// Cap on dual ascent steps before giving up.
pub const MAX_DUAL_STEPS: usize = 100_000;

/// Bisection stops once the bracket on `θ` is this narrow.
const BISECTION_WIDTH: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxSolution {
    pub x: Vec<f64>,
    /// `Γ(x) + h(x) + ‖x − c‖²/(2λ)`.
    pub theta: f64,
    /// `Γ(x) + h(x)`.
    pub model_value: f64,
    pub dual_weights: Vec<f64>,
    /// `(c − x)/λ`, an element of `∂(Γ + h)(x)` at the optimum.
    pub model_subgrad: Vec<f64>,
    pub gap: f64,
    pub dual_value: f64,
    pub dual_steps: usize,
}

/// Subproblem instance: cuts are affine in `u − center`.
#[derive(Debug, Clone, Copy)]
pub struct CutProx<'a> {
    pub cuts: &'a [Cut],
    pub h: &'a SimpleTerm,
    pub center: &'a [f64],
    pub lambda: f64,
}

struct Eval {
    u: Vec<f64>,
    /// `ℓ_i(u)` for every cut.
    lin: Vec<f64>,
    /// `D(w)`.
    dual: f64,
    gap: f64,
    /// Rounding level of the cut values at `u`: the error in forming
    /// `c − λΣw_i g_i` propagated through the spread of the slopes.
    noise: f64,
}

impl<'a> CutProx<'a> {
    fn check(&self) -> Result<()> {
        if self.cuts.is_empty() {
            return Err(PbfError::invalid("bundle model has no cuts"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(PbfError::invalid("prox stepsize λ must be finite and > 0"));
        }
        let n = self.center.len();
        if let Some(c) = self.cuts.iter().find(|c| c.slope.len() != n) {
            return Err(PbfError::DimensionMismatch {
                expected: n,
                got: c.slope.len(),
            });
        }
        Ok(())
    }

    fn cut_values(&self, u: &[f64]) -> Vec<f64> {
        self.cuts
            .iter()
            .map(|c| c.value_at_center + linalg::dot_diff(&c.slope, u, self.center))
            .collect()
    }

    fn aggregate_slope(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.center.len()];
        for (wi, c) in w.iter().zip(self.cuts) {
            if *wi != 0.0 {
                linalg::axpy(*wi, &c.slope, &mut g);
            }
        }
        g
    }

    fn prox_arg(&self, w: &[f64]) -> Vec<f64> {
        linalg::add_scaled(self.center, -self.lambda, &self.aggregate_slope(w))
    }

    fn evaluate(&self, w: &[f64]) -> Eval {
        let v = self.prox_arg(w);
        let u = self.h.prox(self.lambda, &v);
        let lin = self.cut_values(&u);
        let avg: f64 = w.iter().zip(&lin).map(|(a, b)| a * b).sum();
        let max = lin.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let dual = avg + self.h.eval(&u) + linalg::dist_sq(&u, self.center) / (2.0 * self.lambda);
        let g = self.aggregate_slope(w);
        let mut spread = 0.0_f64;
        let mut mass = 0.0;
        for (wi, c) in w.iter().zip(self.cuts) {
            spread = spread.max(linalg::dist(&c.slope, &g));
            mass += wi.abs() * linalg::norm(&c.slope);
        }
        let noise = f64::EPSILON * spread * (linalg::norm(self.center) + self.lambda * mass);
        Eval {
            u,
            lin,
            dual,
            gap: (max - avg).max(0.0),
            noise,
        }
    }

    /// Gap target: the requested tolerance, floored at what double precision
    /// can resolve for cut values of this magnitude.
    fn target(&self, tol: f64, e: &Eval) -> f64 {
        let scale = 1.0 + e.lin.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        tol.max(64.0 * f64::EPSILON * scale + 4.0 * e.noise)
    }

    fn finish(&self, w: Vec<f64>, e: Eval, steps: usize) -> ProxSolution {
        let max = e.lin.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let model_value = max + self.h.eval(&e.u);
        let theta = model_value + linalg::dist_sq(&e.u, self.center) / (2.0 * self.lambda);
        let model_subgrad = linalg::scale(1.0 / self.lambda, &linalg::sub(self.center, &e.u));
        ProxSolution {
            x: e.u,
            theta,
            model_value,
            dual_weights: w,
            model_subgrad,
            gap: e.gap,
            dual_value: e.dual,
            dual_steps: steps,
        }
    }
}

/// Solve the subproblem, dispatching on the number of cuts.
///
/// One cut has a closed form, two cuts use bisection on the scalar dual, and
/// three or more use [`solve_dual_simplex`].
pub fn solve_cut_prox(p: CutProx<'_>, tol: f64, warm: Option<&[f64]>) -> Result<ProxSolution> {
    let (sol, converged) = solve_cut_prox_capped(p, tol, warm, MAX_DUAL_STEPS)?;
    if !converged {
        return Err(PbfError::SubproblemNotConverged {
            gap: sol.gap,
            iterations: MAX_DUAL_STEPS,
        });
    }
    Ok(sol)
}

/// Like [`solve_cut_prox`], but after `max_steps` dual steps returns the best
/// iterate found together with `false` instead of failing.
///
/// The returned `dual_value` is a valid lower bound on the subproblem optimum
/// whether or not the gap target was met.
pub fn solve_cut_prox_capped(
    p: CutProx<'_>,
    tol: f64,
    warm: Option<&[f64]>,
    max_steps: usize,
) -> Result<(ProxSolution, bool)> {
    p.check()?;
    match p.cuts.len() {
        1 => Ok((solve_single(p), true)),
        2 => Ok((solve_two(p, tol)?, true)),
        _ => solve_working_set(p, tol, warm, max_steps),
    }
}

/// Solve on a growing subset of cuts, adding the most violated outside cut
/// until none exceeds the subset's maximum at the solution.
///
/// Cuts far from active (typical after long null sequences with large `λ`)
/// make the full dual badly conditioned; they rarely enter the working set.
fn solve_working_set(
    p: CutProx<'_>,
    tol: f64,
    warm: Option<&[f64]>,
    max_steps: usize,
) -> Result<(ProxSolution, bool)> {
    let k = p.cuts.len();
    let warm = warm.filter(|w| w.len() == k && w.iter().sum::<f64>() > 0.0);
    let start = match warm {
        Some(w) => project_simplex(w),
        None => vec![1.0 / k as f64; k],
    };
    let e0 = p.evaluate(&start);
    let mut set: Vec<usize> = (0..k).filter(|&i| warm.is_some_and(|w| w[i] > 0.0)).collect();
    let top = argmax(&e0.lin);
    for i in [top, k - 1] {
        if !set.contains(&i) {
            set.push(i);
        }
    }
    let mut steps = 0;
    while set.len() < k {
        set.sort_unstable();
        let cuts: Vec<Cut> = set.iter().map(|&i| p.cuts[i].clone()).collect();
        let sub = CutProx { cuts: &cuts, ..p };
        let sub_warm: Option<Vec<f64>> = warm.map(|w| set.iter().map(|&i| w[i]).collect());
        let sol = match set.len() {
            1 => solve_single(sub),
            2 => solve_two(sub, tol)?,
            _ => {
                let (sol, ok) = dual_simplex(sub, tol, sub_warm.as_deref(), max_steps.saturating_sub(steps))?;
                if !ok {
                    // give the remaining budget to the full problem
                    let w = embed(k, &set, &sol.dual_weights);
                    return dual_simplex(p, tol, Some(&w), max_steps.saturating_sub(steps + sol.dual_steps));
                }
                sol
            }
        };
        steps += sol.dual_steps;
        let w = embed(k, &set, &sol.dual_weights);
        let e = p.evaluate(&w);
        let max_in = set.iter().map(|&i| e.lin[i]).fold(f64::NEG_INFINITY, f64::max);
        let target = p.target(tol, &e);
        let worst = (0..k)
            .filter(|i| !set.contains(i))
            .map(|i| (i, e.lin[i] - max_in))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        match worst {
            Some((i, excess)) if excess > 0.25 * target => set.push(i),
            _ if e.gap <= target => return Ok((p.finish(w, e, steps), true)),
            // the subset solution is not accurate enough; hand it to the full solver
            _ => return dual_simplex(p, tol, Some(&w), max_steps.saturating_sub(steps)),
        }
    }
    dual_simplex(p, tol, warm, max_steps.saturating_sub(steps))
}

fn embed(k: usize, set: &[usize], weights: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; k];
    for (&i, wi) in set.iter().zip(weights) {
        w[i] = *wi;
    }
    w
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}

fn solve_single(p: CutProx<'_>) -> ProxSolution {
    let w = vec![1.0];
    let e = p.evaluate(&w);
    p.finish(w, e, 0)
}

fn solve_two(p: CutProx<'_>, tol: f64) -> Result<ProxSolution> {
    // θ is the weight on cut 0; D′(θ) = ℓ_0(u(θ)) − ℓ_1(u(θ)) is nonincreasing.
    let slope_at = |theta: f64| {
        let e = p.evaluate(&[theta, 1.0 - theta]);
        (e.lin[0] - e.lin[1], e)
    };
    let (d1, e1) = slope_at(1.0);
    if d1 >= 0.0 {
        return Ok(p.finish(vec![1.0, 0.0], e1, 1));
    }
    let (d0, e0) = slope_at(0.0);
    if d0 <= 0.0 {
        return Ok(p.finish(vec![0.0, 1.0], e0, 2));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut steps = 2;
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        let (d, _) = slope_at(mid);
        steps += 1;
        if d > 0.0 {
            lo = mid;
        } else if d < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let w = vec![theta, 1.0 - theta];
    let e = p.evaluate(&w);
    if e.gap > p.target(tol, &e) {
        if let Some((w2, e2)) = polish(&p, &w, tol) {
            if e2.gap < e.gap {
                return Ok(p.finish(w2, e2, steps));
            }
        }
    }
    Ok(p.finish(w, e, steps))
}

/// Accelerated projected-gradient ascent on the simplex dual with restarts
/// and backtracking, followed by a Newton solve of the optimality system on
/// the detected support.
pub fn solve_dual_simplex(p: CutProx<'_>, tol: f64, warm: Option<&[f64]>) -> Result<ProxSolution> {
    p.check()?;
    match dual_simplex(p, tol, warm, MAX_DUAL_STEPS)? {
        (sol, true) => Ok(sol),
        (sol, false) => Err(PbfError::SubproblemNotConverged {
            gap: sol.gap,
            iterations: MAX_DUAL_STEPS,
        }),
    }
}

/// The dual value never decreases along the iteration, so the last iterate is
/// also the best lower bound.
fn dual_simplex(p: CutProx<'_>, tol: f64, warm: Option<&[f64]>, max_steps: usize) -> Result<(ProxSolution, bool)> {
    let k = p.cuts.len();
    let mut w = match warm {
        Some(ws) if ws.len() == k && ws.iter().sum::<f64>() > 0.0 => project_simplex(ws),
        _ => vec![1.0 / k as f64; k],
    };
    let mut ew = p.evaluate(&w);
    if ew.gap <= p.target(tol, &ew) {
        return Ok((p.finish(w, ew, 0), true));
    }
    if let Some((wp, ep)) = polish(&p, &w, tol) {
        if ep.gap <= p.target(tol, &ep) {
            return Ok((p.finish(wp, ep, 0), true));
        }
        if ep.dual > ew.dual {
            w = wp;
            ew = ep;
        }
    }

    let mean: Vec<f64> = linalg::scale(1.0 / k as f64, &p.aggregate_slope(&vec![1.0; k]));
    let spread: f64 = p.cuts.iter().map(|c| linalg::dist_sq(&c.slope, &mean)).sum();
    let mut lip = (p.lambda * spread).max(1e-300);

    let mut y = w.clone();
    let mut t = 1.0_f64;
    let mut next_polish = 10usize;

    for step in 1..=max_steps {
        let ey = p.evaluate(&y);
        let mut w_new;
        let mut e_new;
        loop {
            let trial: Vec<f64> = y.iter().zip(&ey.lin).map(|(yi, gi)| yi + gi / lip).collect();
            w_new = project_simplex(&trial);
            e_new = p.evaluate(&w_new);
            let diff = linalg::sub(&w_new, &y);
            let model = ey.dual + linalg::dot(&ey.lin, &diff) - 0.5 * lip * linalg::norm_sq(&diff);
            if e_new.dual >= model - 1e-15 * (1.0 + ey.dual.abs()) || lip > 1e300 {
                break;
            }
            lip *= 2.0;
        }

        if e_new.dual < ew.dual {
            // function-value restart
            t = 1.0;
            y = w.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        y = w_new
            .iter()
            .zip(&w)
            .map(|(a, b)| a + beta * (a - b))
            .collect();
        y = project_simplex(&y);
        t = t_next;
        w = w_new;
        ew = e_new;
        lip *= 0.9;

        let target = p.target(tol, &ew);
        if ew.gap <= target {
            return Ok((p.finish(w, ew, step), true));
        }
        if step >= next_polish {
            next_polish = step + 10 + step / 4;
            if let Some((wp, ep)) = polish(&p, &w, tol) {
                if ep.gap <= p.target(tol, &ep) {
                    return Ok((p.finish(wp, ep, step), true));
                }
                if ep.dual > ew.dual {
                    w = wp;
                    ew = ep;
                    y = w.clone();
                    t = 1.0;
                }
            }
        }
    }
    Ok((p.finish(w, ew, max_steps), false))
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut shift = 0.0;
    for (i, si) in s.iter().enumerate() {
        cum += si;
        let cand = (cum - 1.0) / (i + 1) as f64;
        if si - cand > 0.0 {
            shift = cand;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|x| (x - shift).max(0.0)).collect();
    let total: f64 = out.iter().sum();
    if total > 0.0 && (total - 1.0).abs() > 0.0 {
        for x in &mut out {
            *x /= total;
        }
    }
    out
}

/// Local derivative of `prox_{λh}` at `v`.
enum ProxJacobian {
    Identity,
    Diag(Vec<f64>),
    /// `scale·(I − n nᵀ)`
    Radial { scale: f64, n: Vec<f64> },
}

impl ProxJacobian {
    fn at(h: &SimpleTerm, lambda: f64, v: &[f64]) -> Self {
        match h {
            SimpleTerm::Zero { .. } => ProxJacobian::Identity,
            SimpleTerm::L1 { weight, .. } => {
                let thr = lambda * weight;
                ProxJacobian::Diag(v.iter().map(|x| if x.abs() > thr { 1.0 } else { 0.0 }).collect())
            }
            SimpleTerm::Box { lower, upper } => ProxJacobian::Diag(
                v.iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(x, (l, u))| if l < x && x < u { 1.0 } else { 0.0 })
                    .collect(),
            ),
            SimpleTerm::Ball { center, radius } => {
                let d = linalg::dist(v, center);
                if d <= *radius {
                    ProxJacobian::Identity
                } else {
                    ProxJacobian::Radial {
                        scale: radius / d,
                        n: v.iter().zip(center).map(|(x, c)| (x - c) / d).collect(),
                    }
                }
            }
        }
    }

    /// `aᵀ J b`
    fn form(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            ProxJacobian::Identity => linalg::dot(a, b),
            ProxJacobian::Diag(d) => a.iter().zip(b).zip(d).map(|((x, y), z)| x * y * z).sum(),
            ProxJacobian::Radial { scale, n } => {
                scale * (linalg::dot(a, b) - linalg::dot(a, n) * linalg::dot(b, n))
            }
        }
    }
}

/// Sequential exact QP on the local model of the dual.
///
/// On a fixed face of `prox_{λh}` the dual is the concave quadratic
/// `D(w₀) + ∇D(w₀)ᵀ(w − w₀) − ½(w − w₀)ᵀH(w − w₀)` with `H = λ G J Gᵀ`, where
/// `J` is the local derivative of the prox. Each pass maximizes that model
/// over the simplex exactly; passes repeat while the true dual improves.
fn polish(p: &CutProx<'_>, w0: &[f64], tol: f64) -> Option<(Vec<f64>, Eval)> {
    let k = p.cuts.len();
    let mut w = w0.to_vec();
    let mut best: Option<(Vec<f64>, Eval)> = None;
    for _pass in 0..30 {
        let e = p.evaluate(&w);
        let done = e.gap <= p.target(tol, &e);
        let lin = DVector::from_column_slice(&e.lin);
        if best.as_ref().is_none_or(|(_, b)| e.gap < b.gap) {
            best = Some((w.clone(), e));
        }
        if done {
            break;
        }
        let v = p.prox_arg(&w);
        let jac = ProxJacobian::at(p.h, p.lambda, &v);
        let mut hess = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let q = p.lambda * jac.form(&p.cuts[i].slope, &p.cuts[j].slope);
                hess[(i, j)] = q;
                hess[(j, i)] = q;
            }
        }
        let b = lin + &hess * DVector::from_column_slice(&w);
        let w_new = simplex_qp(&hess, &b, &w)?;
        if w_new == w {
            break;
        }
        w = w_new;
    }
    best
}

/// `min ½ wᵀHw − bᵀw` over the probability simplex for symmetric PSD `H`
/// (possibly singular), by a primal active-set method started at `w0`.
pub fn simplex_qp(hess: &DMatrix<f64>, b: &DVector<f64>, w0: &[f64]) -> Option<Vec<f64>> {
    let k = w0.len();
    let mut w = DVector::from_iterator(k, w0.iter().map(|x| x.max(0.0)));
    let total = w.sum();
    if total <= 0.0 {
        let best = (0..k).fold(0, |bi, i| if b[i] > b[bi] { i } else { bi });
        w = DVector::zeros(k);
        w[best] = 1.0;
    } else {
        w /= total;
    }
    let mut support: Vec<usize> = (0..k).filter(|&i| w[i] > 0.0).collect();
    let scale = 1.0 + b.amax() + hess.amax();
    let tiny = 1e-14 * scale;

    for _ in 0..(20 * k + 100) {
        let grad = hess * &w - b;
        let ns = support.len();
        if ns > 1 {
            // sum-zero basis on the support: columns e_j − e_last
            let mut z = DMatrix::zeros(ns, ns - 1);
            for j in 0..ns - 1 {
                z[(j, j)] = 1.0;
                z[(ns - 1, j)] = -1.0;
            }
            let hs = DMatrix::from_fn(ns, ns, |a, c| hess[(support[a], support[c])]);
            let gs = DVector::from_fn(ns, |a, _| grad[support[a]]);
            let hr = z.transpose() * &hs * &z;
            let gr = z.transpose() * &gs;
            let eig = hr.clone().symmetric_eigen();
            let emax = eig.eigenvalues.amax();
            let cut = 1e-12 * emax.max(1e-300);
            // split the reduced gradient into range and null parts of hr
            let coords = eig.eigenvectors.transpose() * &gr;
            let mut y = DVector::zeros(ns - 1);
            let mut null_part = DVector::zeros(ns - 1);
            for (i, lam) in eig.eigenvalues.iter().enumerate() {
                let col = eig.eigenvectors.column(i);
                if *lam > cut {
                    y -= col * (coords[i] / lam);
                } else {
                    null_part += col * coords[i];
                }
            }
            let ray = null_part.norm() > 1e-13 * (1.0 + gr.norm());
            if ray {
                y = -null_part;
            }
            let d = &z * &y;
            // longest feasible step along d
            let mut alpha = if ray { f64::INFINITY } else { 1.0 };
            let mut block = None;
            for (a, &i) in support.iter().enumerate() {
                if d[a] < 0.0 {
                    let lim = -w[i] / d[a];
                    if lim < alpha {
                        alpha = lim;
                        block = Some(a);
                    }
                }
            }
            if !alpha.is_finite() {
                return None;
            }
            let moved = d.norm() * alpha > 0.0;
            for (a, &i) in support.iter().enumerate() {
                w[i] = (w[i] + alpha * d[a]).max(0.0);
            }
            if let Some(a) = block {
                w[support[a]] = 0.0;
                support.remove(a);
                renormalize(&mut w);
                continue;
            }
            renormalize(&mut w);
            if ray && moved {
                continue;
            }
        }
        // optimality over the simplex: every coordinate's gradient ≥ the support level
        let grad = hess * &w - b;
        let level = support.iter().map(|&i| grad[i]).sum::<f64>() / support.len() as f64;
        let mut entering = None;
        let mut worst = -tiny;
        for i in 0..k {
            if !support.contains(&i) && grad[i] - level < worst {
                worst = grad[i] - level;
                entering = Some(i);
            }
        }
        match entering {
            Some(i) => {
                support.push(i);
                support.sort_unstable();
            }
            None => return Some(w.iter().cloned().collect()),
        }
    }
    None
}

fn renormalize(w: &mut DVector<f64>) {
    let total = w.sum();
    if total > 0.0 {
        *w /= total;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn cut(id: u64, a: f64, g: Vec<f64>) -> Cut {
        Cut {
            id,
            value_at_center: a,
            slope: g,
        }
    }

    fn three_point_check(p: CutProx<'_>, sol: &ProxSolution, rng: &mut SeededRng) {
        let obj = |u: &[f64]| {
            let m = p.cut_values(u).into_iter().fold(f64::NEG_INFINITY, f64::max);
            m + p.h.eval(u) + linalg::dist_sq(u, p.center) / (2.0 * p.lambda)
        };
        for _ in 0..1000 {
            let u = p.h.sample_near(rng, &sol.x, 2.0);
            let lhs = obj(&u);
            let rhs = sol.theta + linalg::dist_sq(&u, &sol.x) / (2.0 * p.lambda);
            assert!(lhs >= rhs - 1e-8, "{lhs} < {rhs}");
        }
    }

    #[test]
    fn one_cut_closed_form() {
        let cuts = [cut(0, 0.0, vec![2.0, 0.0])];
        let h = SimpleTerm::zero(2);
        let c = [0.0, 0.0];
        let p = CutProx { cuts: &cuts, h: &h, center: &c, lambda: 1.0 };
        let s = solve_cut_prox(p, 1e-12, None).unwrap();
        assert_eq!(s.x, vec![-2.0, 0.0]);
        // ℓ(x) = −4, θ = −4 + 2
        assert_eq!(s.theta, -2.0);
        assert_eq!(s.gap, 0.0);

        let h = SimpleTerm::ball(vec![0.0, 0.0], 1.0).unwrap();
        let p = CutProx { cuts: &cuts, h: &h, center: &c, lambda: 1.0 };
        let s = solve_cut_prox(p, 1e-12, None).unwrap();
        assert_eq!(s.x, vec![-1.0, 0.0]);
    }

    #[test]
    fn abs_model_three_cut_and_two_cut() {
        // Γ(u) = max(u, −u) with center 2: cuts anchored at c = 2.
        let c = [2.0];
        let h = SimpleTerm::zero(1);
        let two = [cut(0, 2.0, vec![1.0]), cut(1, -2.0, vec![-1.0])];
        let p = CutProx { cuts: &two, h: &h, center: &c, lambda: 1.0 };
        let s = solve_cut_prox(p, 1e-12, None).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.theta - 1.5).abs() < 1e-12);

        // a redundant third cut forces the simplex solver
        let three = [two[0].clone(), two[1].clone(), cut(2, -10.0, vec![0.0])];
        let p = CutProx { cuts: &three, h: &h, center: &c, lambda: 1.0 };
        let s = solve_cut_prox(p, 1e-12, None).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.theta - 1.5).abs() < 1e-12);
        assert!(s.dual_weights[2] == 0.0);
        assert!((s.dual_value - s.theta).abs() < 1e-12);
    }

    #[test]
    fn simplex_projection_examples() {
        assert_eq!(project_simplex(&[0.5, 0.5]), vec![0.5, 0.5]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.3, 0.3, 0.3]);
        for x in p {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn random_instances_satisfy_certificates() {
        let mut rng = SeededRng::new(21);
        let dim = 4;
        let terms = [
            SimpleTerm::zero(dim),
            SimpleTerm::l1(0.3, dim).unwrap(),
            SimpleTerm::boxed(vec![-0.5; dim], vec![0.7; dim]).unwrap(),
            SimpleTerm::ball(vec![0.1; dim], 0.6).unwrap(),
        ];
        for h in &terms {
            for trial in 0..25 {
                let k = 2 + trial % 9;
                let c = h.project(&rng.in_box(&vec![0.0; dim], 0.5));
                let cuts: Vec<Cut> = (0..k)
                    .map(|i| cut(i as u64, rng.normal(), rng.normal_vec(dim)))
                    .collect();
                let lambda = rng.uniform_in(0.05, 2.0);
                let p = CutProx { cuts: &cuts, h, center: &c, lambda };
                let s = solve_cut_prox(p, 1e-12, None).unwrap();
                assert!(s.gap <= 1e-11, "{h:?} k={k} gap={}", s.gap);
                assert!((s.dual_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(s.dual_weights.iter().all(|w| *w >= 0.0));
                // positive weights sit on active cuts
                let lin = p.cut_values(&s.x);
                let max = lin.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                for (wi, li) in s.dual_weights.iter().zip(&lin) {
                    if *wi > 1e-9 {
                        assert!(max - li <= 1e-9 * (1.0 + max.abs()));
                    }
                }
                three_point_check(p, &s, &mut rng);
            }
        }
    }

    #[test]
    fn large_bundles_converge() {
        let mut rng = SeededRng::new(33);
        for dim in [2usize, 10, 30] {
            let terms = [
                SimpleTerm::zero(dim),
                SimpleTerm::l1(0.1, dim).unwrap(),
                SimpleTerm::boxed(vec![-0.2; dim], vec![0.3; dim]).unwrap(),
                SimpleTerm::ball(vec![0.0; dim], 0.5).unwrap(),
            ];
            for h in &terms {
                for _ in 0..10 {
                    let k = 50;
                    let c = h.project(&rng.in_box(&vec![0.0; dim], 0.3));
                    // cuts of a convex quadratic-plus-abs function: many nearly active
                    let cuts: Vec<Cut> = (0..k)
                        .map(|i| {
                            let z = rng.in_box(&c, 0.2);
                            let g: Vec<f64> = z.iter().enumerate().map(|(j, x)| x * (1.0 + j as f64) + x.signum()).collect();
                            let fz: f64 = z.iter().enumerate().map(|(j, x)| 0.5 * (1.0 + j as f64) * x * x + x.abs()).sum();
                            cut(i as u64, fz + linalg::dot_diff(&g, &c, &z), g)
                        })
                        .collect();
                    let p = CutProx { cuts: &cuts, h, center: &c, lambda: 0.3 };
                    let s = solve_cut_prox(p, 1e-12, None).unwrap();
                    assert!(s.gap <= 1e-11, "dim {dim} {h:?}: gap {}", s.gap);
                }
            }
        }
    }

    #[test]
    fn warm_start_matches_cold_start() {
        let mut rng = SeededRng::new(8);
        let dim = 6;
        let h = SimpleTerm::zero(dim);
        let c = vec![0.0; dim];
        let cuts: Vec<Cut> = (0..12).map(|i| cut(i, rng.normal(), rng.normal_vec(dim))).collect();
        let p = CutProx { cuts: &cuts, h: &h, center: &c, lambda: 0.5 };
        let cold = solve_cut_prox(p, 1e-12, None).unwrap();
        let warm = solve_cut_prox(p, 1e-12, Some(&cold.dual_weights)).unwrap();
        assert!(linalg::dist(&cold.x, &warm.x) < 1e-10);
        assert!(warm.dual_steps <= cold.dual_steps);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let h = SimpleTerm::zero(1);
        let p = CutProx { cuts: &[], h: &h, center: &[0.0], lambda: 1.0 };
        assert!(solve_cut_prox(p, 1e-12, None).is_err());
        let cuts = [cut(0, 0.0, vec![1.0])];
        let p = CutProx { cuts: &cuts, h: &h, center: &[0.0], lambda: 0.0 };
        assert!(solve_cut_prox(p, 1e-12, None).is_err());
    }
}
