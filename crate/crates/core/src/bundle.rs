// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! Bundle models: convex minorants `Γ = max_i ℓ_i + h` of `φ_m(·; c)` built
//! from cuts of `f_m(·; c)`, with one-cut, two-cut and multi-cut updates and
//! the two serious-step resets.

use serde::{Deserialize, Serialize};

use crate::error::{PbfError, Result};
use crate::linalg;
use crate::oracles::Linearization;
use crate::proxstep::{self, CutProx, ProxSolution};
use crate::simple_terms::SimpleTerm;

/// Default cap on the multi-cut bundle size.
pub const DEFAULT_MAX_CUTS: usize = 50;

/// Relative tolerance defining the active set `C(x)`.
pub const ACTIVE_TOL: f64 = 1e-10;

/// Weights below this are treated as zero when deciding which cuts the dual
/// solution uses.
const WEIGHT_FLOOR: f64 = 1e-12;

/// An affine minorant of `f_m(·; center)` stored relative to the center:
/// `u ↦ value_at_center + ⟨slope, u − center⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub id: u64,
    pub value_at_center: f64,
    pub slope: Vec<f64>,
}

impl Cut {
    pub fn eval(&self, center: &[f64], u: &[f64]) -> f64 {
        self.value_at_center + linalg::dot_diff(&self.slope, u, center)
    }

    pub fn to_linearization(&self, center: &[f64]) -> Linearization {
        Linearization {
            base_point: center.to_vec(),
            value_at_base: self.value_at_center,
            slope: self.slope.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    OneCut,
    TwoCut,
    MultiCut { max_cuts: Option<usize> },
}

impl Scheme {
    pub fn multi_default() -> Self {
        Scheme::MultiCut {
            max_cuts: Some(DEFAULT_MAX_CUTS),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::OneCut => "one-cut",
            Scheme::TwoCut => "two-cut",
            Scheme::MultiCut { .. } => "multi-cut",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResetPolicy {
    /// Restart from `ℓ_f(·; x̂_k) + h`.
    #[default]
    FreshCut,
    /// Keep the old cuts shifted to the new center, plus the fresh cut.
    ShiftedMax,
}

/// `Γ = max_i cut_i + h` around a prox center.
///
/// Cut layout per scheme: one-cut holds a single aggregate (two cuts right
/// after a shifted reset); two-cut holds `[aggregate, latest]` or just
/// `[latest]`; multi-cut holds cuts oldest first. The newest cut is always last.
#[derive(Debug, Clone)]
pub struct BundleModel {
    scheme: Scheme,
    h: SimpleTerm,
    center: Vec<f64>,
    cuts: Vec<Cut>,
    /// Dual weights carried over from the last solve, aligned with `cuts`.
    warm: Option<Vec<f64>>,
    next_id: u64,
}

impl BundleModel {
    /// `Γ₁ = ℓ_f(·; x̂₀) + h`, from the plain linearization at the center.
    pub fn new(scheme: Scheme, h: SimpleTerm, first: &Linearization) -> Result<Self> {
        if let Scheme::MultiCut { max_cuts: Some(0) } = scheme {
            return Err(PbfError::invalid("max_cuts must be at least 1"));
        }
        if first.base_point.len() != h.dim() {
            return Err(PbfError::DimensionMismatch {
                expected: h.dim(),
                got: first.base_point.len(),
            });
        }
        let center = first.base_point.clone();
        Ok(Self {
            scheme,
            h,
            cuts: vec![Cut {
                id: 0,
                value_at_center: first.value_at_base,
                slope: first.slope.clone(),
            }],
            center,
            warm: None,
            next_id: 1,
        })
    }

    /// Build a model directly from cuts anchored at `center` (oldest first).
    pub fn from_cuts(scheme: Scheme, h: SimpleTerm, center: Vec<f64>, cuts: Vec<Cut>) -> Result<Self> {
        if cuts.is_empty() {
            return Err(PbfError::invalid("bundle model has no cuts"));
        }
        let next_id = cuts.iter().map(|c| c.id + 1).max().unwrap_or(0);
        Ok(Self {
            scheme,
            h,
            center,
            cuts,
            warm: None,
            next_id,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn h(&self) -> &SimpleTerm {
        &self.h
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    /// `max_i cut_i(u)`.
    pub fn cut_max(&self, u: &[f64]) -> f64 {
        self.cuts
            .iter()
            .map(|c| c.eval(&self.center, u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Γ(u)`; `+∞` outside `dom h`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        let hv = self.h.eval(u);
        if hv.is_infinite() {
            return f64::INFINITY;
        }
        self.cut_max(u) + hv
    }

    /// `argmin Γ + ‖· − center‖²/(2λ)`.
    pub fn solve(&self, lambda: f64, tol: f64) -> Result<ProxSolution> {
        let p = CutProx {
            cuts: &self.cuts,
            h: &self.h,
            center: &self.center,
            lambda,
        };
        proxstep::solve_cut_prox(p, tol, self.warm.as_deref())
    }

    /// Subproblem solve that stops after `max_steps` dual steps with the best
    /// iterate; the flag reports whether the gap target was met.
    pub fn solve_capped(&self, lambda: f64, tol: f64, max_steps: usize) -> Result<(ProxSolution, bool)> {
        let p = CutProx {
            cuts: &self.cuts,
            h: &self.h,
            center: &self.center,
            lambda,
        };
        proxstep::solve_cut_prox_capped(p, tol, self.warm.as_deref(), max_steps)
    }

    /// The dual aggregate `Σ w_i cut_i` (the affine part of `Γ̄`).
    pub fn aggregate(&self, weights: &[f64]) -> Cut {
        let total: f64 = weights.iter().sum();
        let mut slope = vec![0.0; self.center.len()];
        let mut value = 0.0;
        for (w, c) in weights.iter().zip(&self.cuts) {
            let w = w / total;
            if w != 0.0 {
                value += w * c.value_at_center;
                linalg::axpy(w, &c.slope, &mut slope);
            }
        }
        Cut {
            id: u64::MAX,
            value_at_center: value,
            slope,
        }
    }

    /// Indices of `C(x)`: cuts within the active tolerance of `Γ(x)`.
    pub fn active_set(&self, x: &[f64]) -> Vec<usize> {
        let vals: Vec<f64> = self.cuts.iter().map(|c| c.eval(&self.center, x)).collect();
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let gamma = max + self.h.eval(x);
        let tol = ACTIVE_TOL * (1.0 + gamma.abs());
        (0..vals.len()).filter(|&i| max - vals[i] <= tol).collect()
    }

    fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn anchor(&mut self, lin: &Linearization) -> Cut {
        Cut {
            id: self.fresh_id(),
            value_at_center: lin.eval(&self.center),
            slope: lin.slope.clone(),
        }
    }

    /// Null-step update with the new cut `ℓ_{f_m(·; center)}(·; x_j)`.
    ///
    /// `sol` must be the solve of the current model.
    pub fn null_update(&mut self, sol: &ProxSolution, new_cut: &Linearization, tau: f64) -> Result<()> {
        if sol.dual_weights.len() != self.cuts.len() {
            return Err(PbfError::invalid("prox solution does not match the model"));
        }
        let x = &sol.x;
        let gamma_x = self.cut_max(x);
        let agg = self.aggregate(&sol.dual_weights);
        if gamma_x - agg.eval(&self.center, x) > ACTIVE_TOL.sqrt() * (1.0 + gamma_x.abs()) {
            // Γ̄(x) = Γ(x) fails: the dual certificate does not describe x.
            return Err(PbfError::DegenerateActiveSet);
        }
        let new = self.anchor(new_cut);
        match self.scheme {
            Scheme::OneCut => {
                let slope: Vec<f64> = agg
                    .slope
                    .iter()
                    .zip(&new.slope)
                    .map(|(a, b)| tau * a + (1.0 - tau) * b)
                    .collect();
                let combined = Cut {
                    id: new.id,
                    value_at_center: tau * agg.value_at_center + (1.0 - tau) * new.value_at_center,
                    slope,
                };
                self.cuts = vec![combined];
                self.warm = None;
            }
            Scheme::TwoCut => {
                let aggregate = if self.cuts.len() == 1 {
                    self.cuts[0].clone()
                } else {
                    let mut a = agg;
                    a.id = self.cuts[0].id;
                    a
                };
                self.cuts = vec![aggregate, new];
                self.warm = None;
            }
            Scheme::MultiCut { max_cuts } => {
                let active = self.active_set(x);
                let mut keep_required: Vec<bool> = (0..self.cuts.len())
                    .map(|i| sol.dual_weights[i] > WEIGHT_FLOOR || active.contains(&i))
                    .collect();
                if active.is_empty() {
                    return Err(PbfError::DegenerateActiveSet);
                }
                let mut cuts = std::mem::take(&mut self.cuts);
                let mut weights = sol.dual_weights.clone();
                if let Some(cap) = max_cuts {
                    // evict inactive cuts oldest-first until the new cut fits
                    let mut i = 0;
                    while cuts.len() + 1 > cap && i < cuts.len() {
                        if keep_required[i] {
                            i += 1;
                        } else {
                            cuts.remove(i);
                            weights.remove(i);
                            keep_required.remove(i);
                        }
                    }
                }
                cuts.push(new);
                weights.push(0.0);
                self.cuts = cuts;
                self.warm = Some(weights);
            }
        }
        Ok(())
    }

    /// Re-center after a serious step at `new_center`.
    ///
    /// `f_lin` is the plain linearization `ℓ_f(·; x̂_k)`; `last` is the solve
    /// that produced `x̂_k` (its weights collapse old cuts for the one- and
    /// two-cut schemes).
    pub fn serious_reset(
        &mut self,
        new_center: &[f64],
        f_lin: &Linearization,
        policy: ResetPolicy,
        m: f64,
        last: &ProxSolution,
    ) {
        match policy {
            ResetPolicy::FreshCut => {
                self.center = new_center.to_vec();
                let c = self.anchor(f_lin);
                self.cuts = vec![c];
                self.warm = None;
            }
            ResetPolicy::ShiftedMax => {
                let d = linalg::sub(new_center, &self.center);
                let dd = linalg::norm_sq(&d);
                let shift = |c: &Cut| Cut {
                    id: c.id,
                    value_at_center: c.value_at_center + linalg::dot(&c.slope, &d) - 0.5 * m * dd,
                    slope: linalg::add_scaled(&c.slope, -m, &d),
                };
                let shifted: Vec<Cut> = match self.scheme {
                    Scheme::OneCut | Scheme::TwoCut => {
                        let agg = if self.cuts.len() == 1 || last.dual_weights.len() != self.cuts.len() {
                            self.cuts[self.cuts.len() - 1].clone()
                        } else {
                            let mut a = self.aggregate(&last.dual_weights);
                            a.id = self.cuts[0].id;
                            a
                        };
                        vec![shift(&agg)]
                    }
                    Scheme::MultiCut { .. } => self.cuts.iter().map(shift).collect(),
                };
                self.center = new_center.to_vec();
                let fresh = self.anchor(f_lin);
                let mut cuts = shifted;
                if let Scheme::MultiCut { max_cuts: Some(cap) } = self.scheme {
                    while cuts.len() + 1 > cap {
                        cuts.remove(0);
                    }
                }
                cuts.push(fresh);
                self.cuts = cuts;
                self.warm = None;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{regularized_linearize, FnOracle, Problem};
    use crate::rng::SeededRng;
    use std::sync::Arc;

    fn lin(base: f64, value: f64, slope: f64) -> Linearization {
        Linearization {
            base_point: vec![base],
            value_at_base: value,
            slope: vec![slope],
        }
    }

    fn model_1d(scheme: Scheme, h: SimpleTerm, cuts: &[(f64, f64)]) -> BundleModel {
        let cuts = cuts
            .iter()
            .enumerate()
            .map(|(i, &(a, g))| Cut {
                id: i as u64,
                value_at_center: a,
                slope: vec![g],
            })
            .collect();
        BundleModel::from_cuts(scheme, h, vec![0.0], cuts).unwrap()
    }

    #[test]
    fn eval_examples() {
        let m = model_1d(Scheme::multi_default(), SimpleTerm::zero(1), &[(0.0, 1.0), (0.0, -1.0)]);
        assert_eq!(m.eval(&[0.5]), 0.5);

        let m = model_1d(Scheme::OneCut, SimpleTerm::l1(1.0, 1).unwrap(), &[(3.0, 0.0)]);
        assert_eq!(m.eval(&[1.0]), 4.0);

        // {2u − 1, −u + 1} at u = 1
        let m = model_1d(Scheme::TwoCut, SimpleTerm::zero(1), &[(-1.0, 2.0), (1.0, -1.0)]);
        assert_eq!(m.eval(&[1.0]), 1.0);

        let ball = SimpleTerm::ball(vec![0.0], 1.0).unwrap();
        let m = model_1d(Scheme::OneCut, ball, &[(0.0, 1.0)]);
        assert_eq!(m.eval(&[3.0]), f64::INFINITY);
    }

    #[test]
    fn one_cut_with_tau_zero_is_the_new_cut() {
        let mut m = model_1d(Scheme::OneCut, SimpleTerm::zero(1), &[(1.0, 2.0)]);
        let sol = m.solve(1.0, 1e-12).unwrap();
        m.null_update(&sol, &lin(0.5, 3.0, -1.0), 0.0).unwrap();
        assert_eq!(m.len(), 1);
        for u in [-2.0, 0.0, 1.7] {
            assert!((m.eval(&[u]) - lin(0.5, 3.0, -1.0).eval(&[u])).abs() < 1e-14);
        }
    }

    #[test]
    fn two_cut_with_full_weight_keeps_aggregate() {
        // cut 0 dominates near the prox point, so θ = 1
        let mut m = model_1d(Scheme::TwoCut, SimpleTerm::zero(1), &[(5.0, 0.0), (0.0, 0.0)]);
        let sol = m.solve(1.0, 1e-12).unwrap();
        assert_eq!(sol.dual_weights, vec![1.0, 0.0]);
        let before = m.cuts()[0].clone();
        m.null_update(&sol, &lin(0.0, -1.0, 1.0), 0.9).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.cuts()[0].value_at_center, before.value_at_center);
        assert_eq!(m.cuts()[0].slope, before.slope);
        assert_eq!(m.cuts()[1].slope, vec![1.0]);
    }

    #[test]
    fn multi_cut_keeps_active_and_new() {
        // c0 active at the prox point, c1 far below
        let mut m = model_1d(
            Scheme::MultiCut { max_cuts: Some(2) },
            SimpleTerm::zero(1),
            &[(1.0, 0.5), (-50.0, 0.0)],
        );
        let sol = m.solve(1.0, 1e-12).unwrap();
        m.null_update(&sol, &lin(0.3, 0.0, 2.0), 0.5).unwrap();
        let ids: Vec<u64> = m.cuts().iter().map(|c| c.id).collect();
        assert_eq!(ids, vec![0, 2]);

        // unbounded keeps everything
        let mut m = model_1d(
            Scheme::MultiCut { max_cuts: None },
            SimpleTerm::zero(1),
            &[(1.0, 0.5), (-50.0, 0.0)],
        );
        let sol = m.solve(1.0, 1e-12).unwrap();
        m.null_update(&sol, &lin(0.3, 0.0, 2.0), 0.5).unwrap();
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn shifted_max_with_unmoved_center_only_adds_cut() {
        let mut m = model_1d(Scheme::multi_default(), SimpleTerm::zero(1), &[(1.0, 0.5), (0.2, -1.0)]);
        let sol = m.solve(1.0, 1e-12).unwrap();
        let before = m.cuts().to_vec();
        m.serious_reset(&[0.0], &lin(0.0, 0.7, 0.1), ResetPolicy::ShiftedMax, 1.0, &sol);
        assert_eq!(&m.cuts()[..2], &before[..]);
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn shifted_max_slope_example() {
        // f(u) = |u|, m = 1, cut ℓ over center 0 with slope 1; new center 0.5
        let mut m = model_1d(Scheme::multi_default(), SimpleTerm::zero(1), &[(0.0, 1.0)]);
        let sol = m.solve(1.0, 1e-12).unwrap();
        m.serious_reset(&[0.5], &lin(0.5, 0.5, 1.0), ResetPolicy::ShiftedMax, 1.0, &sol);
        assert_eq!(m.cuts()[0].slope, vec![0.5]);
        // value at new center: 0.5 − (1/2)·0.25
        assert_eq!(m.cuts()[0].value_at_center, 0.375);
    }

    #[test]
    fn fresh_cut_yields_single_cut() {
        for scheme in [Scheme::OneCut, Scheme::TwoCut, Scheme::multi_default()] {
            let mut m = model_1d(scheme, SimpleTerm::zero(1), &[(1.0, 0.5), (0.2, -1.0)]);
            let sol = m.solve(1.0, 1e-12).unwrap();
            m.serious_reset(&[0.4], &lin(0.4, 1.0, 2.0), ResetPolicy::FreshCut, 1.0, &sol);
            assert_eq!(m.len(), 1);
            assert_eq!(m.center(), &[0.4]);
            assert_eq!(m.eval(&[1.4]), 3.0);
        }
    }

    /// f(u) = Σ|u_i| + cos(u_0) with m = 1.
    fn test_problem(dim: usize) -> Problem {
        let f = FnOracle::new(
            dim,
            |x| x.iter().map(|v| v.abs()).sum::<f64>() + x[0].cos(),
            move |x| {
                let mut g: Vec<f64> = x.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
                g[0] -= x[0].sin();
                g
            },
        );
        Problem::new(Arc::new(f), SimpleTerm::l1(0.2, dim).unwrap(), 1.0, (dim as f64).sqrt(), 1.0).unwrap()
    }

    #[test]
    fn gbus_sandwich_and_minorant_across_a_cycle() {
        let dim = 3;
        let p = test_problem(dim);
        let lambda = 0.7;
        let tau = 0.8;
        let mut rng = SeededRng::new(17);
        for scheme in [Scheme::OneCut, Scheme::TwoCut, Scheme::MultiCut { max_cuts: Some(4) }] {
            let c = vec![0.3, -0.2, 0.5];
            let first = crate::oracles::linearize(&p, &c).unwrap();
            let mut m = BundleModel::new(scheme, p.h.clone(), &first).unwrap();
            for _ in 0..12 {
                let sol = m.solve(lambda, 1e-12).unwrap();
                let agg = m.aggregate(&sol.dual_weights);
                // Γ̄(x) = Γ(x)
                let gx = m.cut_max(&sol.x);
                assert!((agg.eval(&c, &sol.x) - gx).abs() <= 1e-9 * (1.0 + gx.abs()));
                let new_cut = regularized_linearize(&p, &c, &sol.x).unwrap();
                m.null_update(&sol, &new_cut, tau).unwrap();
                for _ in 0..1000 {
                    let u = rng.in_box(&c, 2.0);
                    let hu = p.h.eval(&u);
                    let lower = tau * (agg.eval(&c, &u) + hu) + (1.0 - tau) * (new_cut.eval(&u) + hu);
                    let upper = p.f_m(&u, &c) + hu;
                    let g = m.eval(&u);
                    assert!(lower - 1e-9 <= g, "{scheme:?}: sandwich lower");
                    assert!(g <= upper + 1e-9, "{scheme:?}: minorant");
                }
                if let Scheme::MultiCut { max_cuts: Some(cap) } = scheme {
                    assert!(m.len() <= cap);
                }
            }
        }
    }

    #[test]
    fn serious_resets_sandwich_new_model() {
        let dim = 2;
        let p = test_problem(dim);
        let mut rng = SeededRng::new(5);
        for scheme in [Scheme::OneCut, Scheme::TwoCut, Scheme::multi_default()] {
            for policy in [ResetPolicy::FreshCut, ResetPolicy::ShiftedMax] {
                let c = vec![0.4, -0.3];
                let mut m = BundleModel::new(scheme, p.h.clone(), &crate::oracles::linearize(&p, &c).unwrap()).unwrap();
                let mut sol = m.solve(0.5, 1e-12).unwrap();
                for _ in 0..4 {
                    let cut = regularized_linearize(&p, &c, &sol.x).unwrap();
                    m.null_update(&sol, &cut, 0.7).unwrap();
                    sol = m.solve(0.5, 1e-12).unwrap();
                }
                let xk = sol.x.clone();
                let f_lin = crate::oracles::linearize(&p, &xk).unwrap();
                m.serious_reset(&xk, &f_lin, policy, p.m, &sol);
                for _ in 0..1000 {
                    let u = rng.in_box(&xk, 2.0);
                    let hu = p.h.eval(&u);
                    let g = m.eval(&u);
                    assert!(f_lin.eval(&u) + hu <= g + 1e-9);
                    assert!(g <= p.phi_reg(&u, &xk, p.m) + 1e-9, "{scheme:?} {policy:?}");
                }
            }
        }
    }
}
