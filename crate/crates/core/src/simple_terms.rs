// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! Catalog of simple convex terms `h` with exact proximal maps.
//!
//! Every bundle subproblem reduces to one evaluation of `prox_{λh}`, so the
//! catalog is restricted to terms whose prox has a closed form: zero, a
//! weighted ℓ₁ norm, and the indicators of a box and of a Euclidean ball.

use serde::{Deserialize, Serialize};

use crate::error::{PbfError, Result};
use crate::linalg;
use crate::rng::SeededRng;

/// Relative slack used when deciding ball membership; radial projection can
/// land a few ulps outside the sphere.
const BALL_MEMBERSHIP_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimpleTerm {
    Zero {
        dim: usize,
    },
    L1 {
        weight: f64,
        dim: usize,
    },
    /// Indicator of `{u : lower ≤ u ≤ upper}`; infinite bounds serialize as `null`.
    Box {
        #[serde(with = "lower_bounds")]
        lower: Vec<f64>,
        #[serde(with = "upper_bounds")]
        upper: Vec<f64>,
    },
    /// Indicator of `{u : ‖u − center‖ ≤ radius}`.
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
}

impl SimpleTerm {
    pub fn zero(dim: usize) -> Self {
        SimpleTerm::Zero { dim }
    }

    pub fn l1(weight: f64, dim: usize) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(PbfError::invalid("L1 weight must be finite and ≥ 0"));
        }
        Ok(SimpleTerm::L1 { weight, dim })
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(PbfError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || *l == f64::INFINITY || *u == f64::NEG_INFINITY) {
            return Err(PbfError::invalid("box requires lower ≤ upper with a nonempty interval per coordinate"));
        }
        Ok(SimpleTerm::Box { lower, upper })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(PbfError::invalid("ball radius must be finite and > 0"));
        }
        Ok(SimpleTerm::Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            SimpleTerm::Zero { dim } | SimpleTerm::L1 { dim, .. } => *dim,
            SimpleTerm::Box { lower, .. } => lower.len(),
            SimpleTerm::Ball { center, .. } => center.len(),
        }
    }

    /// Whether `dom h` is bounded.
    pub fn is_bounded(&self) -> bool {
        match self {
            SimpleTerm::Zero { .. } | SimpleTerm::L1 { .. } => false,
            SimpleTerm::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .all(|(l, u)| l.is_finite() && u.is_finite()),
            SimpleTerm::Ball { .. } => true,
        }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        match self {
            SimpleTerm::Zero { .. } | SimpleTerm::L1 { .. } => u.iter().all(|x| x.is_finite()),
            SimpleTerm::Box { lower, upper } => u
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (l, h))| l <= x && x <= h),
            SimpleTerm::Ball { center, radius } => {
                linalg::dist(u, center) <= radius * (1.0 + BALL_MEMBERSHIP_RTOL)
            }
        }
    }

    /// `h(u)`; `+∞` exactly when `u ∉ dom h`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            SimpleTerm::Zero { .. } => 0.0,
            SimpleTerm::L1 { weight, .. } => weight * u.iter().map(|x| x.abs()).sum::<f64>(),
            SimpleTerm::Box { .. } | SimpleTerm::Ball { .. } => {
                if self.contains(u) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `argmin_u { h(u) + ‖u − v‖²/(2t) }`.
    pub fn prox(&self, t: f64, v: &[f64]) -> Vec<f64> {
        debug_assert!(t > 0.0);
        match self {
            SimpleTerm::Zero { .. } => v.to_vec(),
            SimpleTerm::L1 { weight, .. } => {
                let thr = t * weight;
                v.iter().map(|&x| soft_threshold(x, thr)).collect()
            }
            SimpleTerm::Box { .. } | SimpleTerm::Ball { .. } => self.project(v),
        }
    }

    /// Projection onto `dom h` (identity for the finite-valued variants).
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        match self {
            SimpleTerm::Zero { .. } | SimpleTerm::L1 { .. } => v.to_vec(),
            SimpleTerm::Box { lower, upper } => v
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(x, (l, h))| x.max(*l).min(*h))
                .collect(),
            SimpleTerm::Ball { center, radius } => {
                let d = linalg::dist(v, center);
                if d <= *radius {
                    v.to_vec()
                } else {
                    let s = radius / d;
                    v.iter().zip(center).map(|(x, c)| c + s * (x - c)).collect()
                }
            }
        }
    }

    /// Returns `v + s*` where `s* ∈ ∂h(u)` minimizes `‖v + s‖`.
    ///
    /// With `v` a subgradient of the rest of an objective at `u`, the result is
    /// the minimal-norm element of `v + ∂h(u)`.
    pub fn min_norm_shift(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        if !self.contains(u) {
            return Err(PbfError::OutsideDomain);
        }
        Ok(match self {
            SimpleTerm::Zero { .. } => v.to_vec(),
            SimpleTerm::L1 { weight, .. } => u
                .iter()
                .zip(v)
                .map(|(&ui, &vi)| {
                    if ui > 0.0 {
                        vi + weight
                    } else if ui < 0.0 {
                        vi - weight
                    } else {
                        soft_threshold(vi, *weight)
                    }
                })
                .collect(),
            SimpleTerm::Box { lower, upper } => u
                .iter()
                .zip(v)
                .zip(lower.iter().zip(upper))
                .map(|((&ui, &vi), (&l, &h))| {
                    if l == h {
                        0.0
                    } else if ui <= l {
                        // normal cone (−∞, 0]
                        vi.min(0.0)
                    } else if ui >= h {
                        vi.max(0.0)
                    } else {
                        vi
                    }
                })
                .collect(),
            SimpleTerm::Ball { center, radius } => {
                let d = linalg::dist(u, center);
                if d < radius * (1.0 - BALL_MEMBERSHIP_RTOL) {
                    v.to_vec()
                } else {
                    let n: Vec<f64> = u.iter().zip(center).map(|(x, c)| (x - c) / d).collect();
                    let t = (-linalg::dot(v, &n)).max(0.0);
                    linalg::add_scaled(v, t, &n)
                }
            }
        })
    }

    /// Sample a point of `dom h` from the box `x ± radius` (projected into the domain).
    pub fn sample_near(&self, rng: &mut SeededRng, x: &[f64], radius: f64) -> Vec<f64> {
        let p = rng.in_box(x, radius);
        self.project(&p)
    }

    /// `sup { |⟨a, u⟩| : u ∈ dom h }`, `+∞` for unbounded domains.
    pub fn max_abs_inner(&self, a: &[f64]) -> f64 {
        match self {
            SimpleTerm::Zero { .. } | SimpleTerm::L1 { .. } => f64::INFINITY,
            SimpleTerm::Box { lower, upper } => a
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(ai, (l, h))| {
                    if *ai == 0.0 {
                        0.0
                    } else {
                        ai.abs() * l.abs().max(h.abs())
                    }
                })
                .sum(),
            SimpleTerm::Ball { center, radius } => {
                linalg::dot(a, center).abs() + radius * linalg::norm(a)
            }
        }
    }
}

#[inline]
pub fn soft_threshold(x: f64, thr: f64) -> f64 {
    if x > thr {
        x - thr
    } else if x < -thr {
        x + thr
    } else {
        0.0
    }
}

macro_rules! bound_serde {
    ($name:ident, $inf:expr) => {
        mod $name {
            use serde::{Deserialize, Deserializer, Serialize, Serializer};

            pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
                let opt: Vec<Option<f64>> =
                    v.iter().map(|x| if x.is_finite() { Some(*x) } else { None }).collect();
                opt.serialize(s)
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
                let opt = Vec::<Option<f64>>::deserialize(d)?;
                Ok(opt.into_iter().map(|x| x.unwrap_or($inf)).collect())
            }
        }
    };
}

bound_serde!(lower_bounds, f64::NEG_INFINITY);
bound_serde!(upper_bounds, f64::INFINITY);

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn catalog(dim: usize) -> Vec<SimpleTerm> {
        vec![
            SimpleTerm::zero(dim),
            SimpleTerm::l1(0.7, dim).unwrap(),
            SimpleTerm::boxed(vec![-1.0; dim], vec![0.5; dim]).unwrap(),
            SimpleTerm::boxed(
                (0..dim).map(|i| if i % 2 == 0 { f64::NEG_INFINITY } else { -0.3 }).collect(),
                (0..dim).map(|i| if i % 3 == 0 { f64::INFINITY } else { 0.8 }).collect(),
            )
            .unwrap(),
            SimpleTerm::ball(vec![0.2; dim], 1.3).unwrap(),
        ]
    }

    #[test]
    fn eval_examples() {
        assert_eq!(SimpleTerm::zero(2).eval(&[5.0, -1.0]), 0.0);
        assert_eq!(SimpleTerm::l1(2.0, 2).unwrap().eval(&[1.0, -3.0]), 8.0);
        let ball = SimpleTerm::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(ball.eval(&[2.0, 0.0]), f64::INFINITY);
        assert_eq!(ball.eval(&[0.6, 0.8]), 0.0);
    }

    #[test]
    fn prox_examples() {
        assert_eq!(SimpleTerm::zero(2).prox(1.0, &[1.5, -2.0]), vec![1.5, -2.0]);
        assert_eq!(SimpleTerm::l1(1.0, 2).unwrap().prox(1.0, &[2.0, -0.5]), vec![1.0, 0.0]);
        let ball = SimpleTerm::ball(vec![0.0, 0.0], 1.0).unwrap();
        for t in [0.1, 1.0, 50.0] {
            let p = ball.prox(t, &[3.0, 4.0]);
            assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        }
    }

    #[test]
    fn box_prox_clamps_with_infinite_bounds() {
        let b = SimpleTerm::boxed(vec![f64::NEG_INFINITY, 0.0], vec![1.0, f64::INFINITY]).unwrap();
        assert_eq!(b.prox(2.0, &[-1e9, -3.0]), vec![-1e9, 0.0]);
        assert_eq!(b.prox(2.0, &[4.0, 1e9]), vec![1.0, 1e9]);
        assert!(!b.is_bounded());
    }

    #[test]
    fn invalid_terms_rejected() {
        assert!(SimpleTerm::l1(-1.0, 2).is_err());
        assert!(SimpleTerm::ball(vec![0.0], 0.0).is_err());
        assert!(SimpleTerm::boxed(vec![1.0], vec![0.0]).is_err());
        assert!(SimpleTerm::boxed(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn box_bounds_roundtrip_json_with_infinities() {
        let b = SimpleTerm::boxed(vec![f64::NEG_INFINITY, -1.0], vec![2.0, f64::INFINITY]).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert!(s.contains("null"));
        let back: SimpleTerm = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn l1_moreau_decomposition() {
        // prox_t(v) + t·proj_{‖·‖∞ ≤ w}(v/t) = v
        let w = 0.8;
        let h = SimpleTerm::l1(w, 4).unwrap();
        let mut rng = SeededRng::new(3);
        for _ in 0..200 {
            let t = rng.uniform_in(0.05, 3.0);
            let v = rng.normal_vec(4);
            let p = h.prox(t, &v);
            for i in 0..4 {
                let q = (v[i] / t).clamp(-w, w);
                assert!((p[i] + t * q - v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn prox_is_coordinatewise_optimal() {
        // g(u*) ≤ g(u* ± δ e_i) for the prox objective
        let dim = 4;
        let mut rng = SeededRng::new(11);
        for h in catalog(dim) {
            for _ in 0..100 {
                let t = rng.uniform_in(0.1, 2.0);
                let v: Vec<f64> = rng.normal_vec(dim).iter().map(|x| 2.0 * x).collect();
                let u = h.prox(t, &v);
                let g = |p: &[f64]| h.eval(p) + linalg::dist_sq(p, &v) / (2.0 * t);
                let base = g(&u);
                for i in 0..dim {
                    for s in [-1e-6, 1e-6] {
                        let mut p = u.clone();
                        p[i] += s;
                        assert!(base <= g(&p) + 1e-13, "{h:?} coord {i}");
                    }
                }
            }
        }
    }

    #[test]
    fn min_norm_shift_vanishes_at_prox_optimality() {
        // u = prox_t(v) ⇔ (v − u)/t ∈ ∂h(u), so (u − v)/t + ∂h(u) ∋ 0.
        let dim = 3;
        let mut rng = SeededRng::new(5);
        for h in catalog(dim) {
            for _ in 0..100 {
                let t = rng.uniform_in(0.1, 2.0);
                let v: Vec<f64> = rng.normal_vec(dim).iter().map(|x| 3.0 * x).collect();
                let u = h.prox(t, &v);
                let g: Vec<f64> = u.iter().zip(&v).map(|(a, b)| (a - b) / t).collect();
                let r = h.min_norm_shift(&u, &g).unwrap();
                assert!(linalg::norm(&r) < 1e-9, "{h:?}: residual {}", linalg::norm(&r));
            }
        }
    }

    proptest! {
        #[test]
        fn prox_is_nonexpansive(
            a in proptest::collection::vec(-5.0f64..5.0, 3),
            b in proptest::collection::vec(-5.0f64..5.0, 3),
            t in 0.01f64..4.0,
        ) {
            for h in catalog(3) {
                let pa = h.prox(t, &a);
                let pb = h.prox(t, &b);
                prop_assert!(linalg::dist(&pa, &pb) <= linalg::dist(&a, &b) + 1e-12);
                prop_assert!(h.contains(&pa));
            }
        }
    }
}
