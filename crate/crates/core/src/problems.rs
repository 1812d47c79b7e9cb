// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! Seeded benchmark instances with declared `(m, M, L)`.
//!
//! Every instance carries its full data, so a JSON instance file rebuilds the
//! same oracle bit for bit without rerunning the generator.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{PbfError, Result};
use crate::linalg;
use crate::oracles::{check_hybrid_condition, check_weak_convexity, HybridOracle, Problem, SamplingReport};
use crate::rng::SeededRng;
use crate::simple_terms::SimpleTerm;

/// Smallest modulus declared for the hybrid instance; the convex case
/// (`smooth_weight = 0`) still needs `m > 0`.
pub const MIN_HYBRID_MODULUS: f64 = 1e-2;

/// Bounded domain for phase retrieval, centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseDomain {
    Ball { radius: f64 },
    Box { half_width: f64 },
}

impl PhaseDomain {
    fn term(&self, dim: usize) -> Result<SimpleTerm> {
        match *self {
            PhaseDomain::Ball { radius } => SimpleTerm::ball(vec![0.0; dim], radius),
            PhaseDomain::Box { half_width } => {
                if !(half_width > 0.0 && half_width.is_finite()) {
                    return Err(PbfError::invalid("box half-width must be finite and > 0"));
                }
                SimpleTerm::boxed(vec![-half_width; dim], vec![half_width; dim])
            }
        }
    }

    fn extent(&self) -> f64 {
        match *self {
            PhaseDomain::Ball { radius } => radius,
            PhaseDomain::Box { half_width } => half_width,
        }
    }
}

impl Default for PhaseDomain {
    fn default() -> Self {
        PhaseDomain::Ball { radius: 2.0 }
    }
}

/// Generator inputs, echoed into the instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum GeneratorParams {
    PhaseRetrieval {
        n_samples: usize,
        dim: usize,
        noise: f64,
        domain: PhaseDomain,
    },
    HybridSynthetic {
        dim: usize,
        smooth_weight: f64,
        kink_count: usize,
        radius: f64,
    },
    ConvexQp {
        dim: usize,
        m: f64,
    },
}

impl GeneratorParams {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorParams::PhaseRetrieval { .. } => "phase_retrieval",
            GeneratorParams::HybridSynthetic { .. } => "hybrid_synthetic",
            GeneratorParams::ConvexQp { .. } => "convex_qp",
        }
    }

    /// Run the generator.
    pub fn generate(&self, seed: u64) -> Result<Instance> {
        match *self {
            GeneratorParams::PhaseRetrieval {
                n_samples,
                dim,
                noise,
                domain,
            } => gen_phase_retrieval(n_samples, dim, seed, noise, domain),
            GeneratorParams::HybridSynthetic {
                dim,
                smooth_weight,
                kink_count,
                radius,
            } => gen_hybrid_synthetic_in(dim, seed, smooth_weight, kink_count, radius),
            GeneratorParams::ConvexQp { dim, m } => gen_convex_qp(dim, seed, m),
        }
    }
}

/// Oracle data. Matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceData {
    /// `f(x) = (1/n) Σ |⟨a_i, x⟩² − b_i|`.
    PhaseRetrieval { dim: usize, a: Vec<f64>, b: Vec<f64> },
    /// `f(x) = w Σ_j (c_j x_j²/2 + cos(x_j + p_j)) + max_k (⟨g_k, x⟩ + e_k)`,
    /// the max term omitted when there are no pieces.
    HybridSynthetic {
        dim: usize,
        weight: f64,
        curvature: Vec<f64>,
        phase: Vec<f64>,
        slopes: Vec<f64>,
        offsets: Vec<f64>,
    },
    /// `f(x) = ½ (x − x*)ᵀ Q (x − x*)`.
    Quadratic { dim: usize, q: Vec<f64>, center: Vec<f64> },
}

impl InstanceData {
    fn rows<'a>(&self, mat: &'a [f64]) -> std::slice::ChunksExact<'a, f64> {
        mat.chunks_exact(self.dim())
    }
}

impl HybridOracle for InstanceData {
    fn dim(&self) -> usize {
        match self {
            InstanceData::PhaseRetrieval { dim, .. }
            | InstanceData::HybridSynthetic { dim, .. }
            | InstanceData::Quadratic { dim, .. } => *dim,
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.value_and_subgradient(x).0
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.value_and_subgradient(x).1
    }

    fn value_and_subgradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let n = x.len();
        match self {
            InstanceData::PhaseRetrieval { a, b, .. } => {
                let inv = 1.0 / b.len() as f64;
                let mut val = 0.0;
                let mut g = vec![0.0; n];
                for (ai, bi) in self.rows(a).zip(b) {
                    let s = linalg::dot(ai, x);
                    let r = s * s - bi;
                    val += r.abs();
                    // sign(0) = 0
                    let sg = if r > 0.0 {
                        1.0
                    } else if r < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    if sg != 0.0 {
                        linalg::axpy(2.0 * sg * s * inv, ai, &mut g);
                    }
                }
                (inv * val, g)
            }
            InstanceData::HybridSynthetic {
                weight,
                curvature,
                phase,
                slopes,
                offsets,
                ..
            } => {
                let mut val = 0.0;
                let mut g = vec![0.0; n];
                for j in 0..n {
                    let (c, p) = (curvature[j], phase[j]);
                    val += weight * (0.5 * c * x[j] * x[j] + (x[j] + p).cos());
                    g[j] = weight * (c * x[j] - (x[j] + p).sin());
                }
                if !offsets.is_empty() {
                    // first maximizer on ties
                    let (best, top) = self
                        .rows(slopes)
                        .zip(offsets)
                        .map(|(gk, ek)| linalg::dot(gk, x) + ek)
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
                    val += top;
                    linalg::axpy(1.0, &slopes[best * n..(best + 1) * n], &mut g);
                }
                (val, g)
            }
            InstanceData::Quadratic { q, center, .. } => {
                let d = linalg::sub(x, center);
                let g: Vec<f64> = self.rows(q).map(|row| linalg::dot(row, &d)).collect();
                (0.5 * linalg::dot(&d, &g), g)
            }
        }
    }
}

/// Declared constants and how they were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeclaredConstants {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    #[serde(rename = "L")]
    pub lip: f64,
    pub phi_star_lower: f64,
    pub rule: String,
}

/// The serialized form of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub name: String,
    pub seed: u64,
    pub params: GeneratorParams,
    pub h: SimpleTerm,
    pub constants: DeclaredConstants,
    /// Planted or known minimizer, when there is one.
    pub planted: Option<Vec<f64>>,
    /// Suggested starting point (in `dom h`).
    pub x0: Vec<f64>,
    pub data: InstanceData,
}

/// A generated or loaded benchmark instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub file: InstanceFile,
    pub problem: Problem,
}

impl Instance {
    pub fn from_file(file: InstanceFile) -> Result<Self> {
        let c = &file.constants;
        if file.data.dim() != file.h.dim() || file.x0.len() != file.h.dim() {
            return Err(PbfError::Malformed("instance dimensions disagree".into()));
        }
        let problem = Problem::new(Arc::new(file.data.clone()), file.h.clone(), c.m, c.big_m, c.lip)?
            .with_lower_bound(c.phi_star_lower);
        Ok(Self { file, problem })
    }

    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn seed(&self) -> u64 {
        self.file.seed
    }

    pub fn known_phi_star_lower(&self) -> f64 {
        self.file.constants.phi_star_lower
    }

    pub fn x0(&self) -> &[f64] {
        &self.file.x0
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Center and radius of the region the sampling checks draw from.
    pub fn sampling_region(&self) -> (Vec<f64>, f64) {
        match &self.file.h {
            SimpleTerm::Ball { center, radius } => (center.clone(), *radius),
            SimpleTerm::Box { lower, upper } if self.file.h.is_bounded() => {
                let c = lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect();
                let r = lower.iter().zip(upper).map(|(l, u)| 0.5 * (u - l)).fold(0.0, f64::max);
                (c, r)
            }
            _ => {
                let c = self.file.planted.clone().unwrap_or_else(|| self.file.x0.clone());
                let r = 2.0 * (1.0 + linalg::dist(&c, &self.file.x0));
                (c, r)
            }
        }
    }

    /// Sampling checks of the hybrid condition and of weak convexity.
    pub fn verify(&self, samples: usize, seed: u64) -> (SamplingReport, SamplingReport) {
        let (c, r) = self.sampling_region();
        (
            check_hybrid_condition(&self.problem, &c, r, samples, seed),
            check_weak_convexity(&self.problem, &c, r, samples, seed ^ 0x9e37_79b9_7f4a_7c15),
        )
    }
}

fn check_dims(dim: usize, n: usize) -> Result<()> {
    if dim == 0 || n == 0 {
        return Err(PbfError::invalid("dimensions must be ≥ 1"));
    }
    Ok(())
}

/// Robust phase retrieval with Gaussian measurements and a planted unit
/// vector `x°`.
///
/// `b_i = ⟨a_i, x°⟩² + noise·ξ_i` with standard normal `ξ_i`. Declares
/// `m = (2/n)Σ‖a_i‖²`, `L = 0` and `M = (2/n)Σ‖a_i‖·sup_{dom h}|⟨a_i, ·⟩|`, a
/// bound on `sup ‖f′‖` over the domain.
pub fn gen_phase_retrieval(
    n_samples: usize,
    dim: usize,
    seed: u64,
    noise: f64,
    domain: PhaseDomain,
) -> Result<Instance> {
    check_dims(dim, n_samples)?;
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(PbfError::invalid("noise must be finite and ≥ 0"));
    }
    let h = domain.term(dim)?;
    let mut rng = SeededRng::new(seed);
    let mut planted = rng.normal_vec(dim);
    let pn = linalg::norm(&planted);
    planted.iter_mut().for_each(|v| *v /= pn);
    // keep the planted point inside a small box
    if let PhaseDomain::Box { half_width } = domain {
        let top = linalg::max_abs(&planted);
        if top > half_width {
            planted.iter_mut().for_each(|v| *v *= half_width / top);
        }
    }
    let mut a = Vec::with_capacity(n_samples * dim);
    let mut b = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let ai = rng.normal_vec(dim);
        let s = linalg::dot(&ai, &planted);
        b.push(s * s + noise * rng.normal());
        a.extend(ai);
    }
    let x0 = h.project(&rng.in_ball(&vec![0.0; dim], domain.extent()));

    let inv = 1.0 / n_samples as f64;
    let (mut m, mut big_m) = (0.0, 0.0);
    for ai in a.chunks_exact(dim) {
        let na = linalg::norm(ai);
        m += 2.0 * inv * na * na;
        big_m += 2.0 * inv * na * h.max_abs_inner(ai);
    }
    let file = InstanceFile {
        name: format!("phase_retrieval_n{n_samples}_d{dim}_s{seed}"),
        seed,
        params: GeneratorParams::PhaseRetrieval {
            n_samples,
            dim,
            noise,
            domain,
        },
        h,
        constants: DeclaredConstants {
            m,
            big_m,
            lip: 0.0,
            phi_star_lower: 0.0,
            rule: "m = (2/n)Σ‖a_i‖² (conservative); M = (2/n)Σ‖a_i‖ sup|⟨a_i,u⟩| over dom h; L = 0".into(),
        },
        planted: Some(planted),
        x0,
        data: InstanceData::PhaseRetrieval { dim, a, b },
    };
    Instance::from_file(file)
}

/// Hybrid instance on the ball of radius 2 about the origin.
pub fn gen_hybrid_synthetic(dim: usize, seed: u64, smooth_weight: f64, kink_count: usize) -> Result<Instance> {
    gen_hybrid_synthetic_in(dim, seed, smooth_weight, kink_count, 2.0)
}

/// Smooth nonconvex separable term plus a max of `kink_count` affine pieces.
///
/// With `c_j ∈ [0, 1)` the smooth Hessian is `w·diag(c_j − cos(x_j + p_j))`,
/// so `m = w·max(1 − c_j)` and `L = w·max(1 + c_j)`. The max term is convex
/// and `M` is half the diameter of its slope set.
pub fn gen_hybrid_synthetic_in(
    dim: usize,
    seed: u64,
    smooth_weight: f64,
    kink_count: usize,
    radius: f64,
) -> Result<Instance> {
    check_dims(dim, 1)?;
    if !(smooth_weight >= 0.0 && smooth_weight.is_finite()) {
        return Err(PbfError::invalid("smooth_weight must be finite and ≥ 0"));
    }
    let h = SimpleTerm::ball(vec![0.0; dim], radius)?;
    let mut rng = SeededRng::new(seed);
    let curvature: Vec<f64> = (0..dim).map(|_| rng.uniform_in(0.0, 0.9)).collect();
    let phase: Vec<f64> = (0..dim).map(|_| rng.uniform_in(0.0, std::f64::consts::TAU)).collect();
    let mut slopes = Vec::with_capacity(kink_count * dim);
    let mut offsets = Vec::with_capacity(kink_count);
    for _ in 0..kink_count {
        slopes.extend(rng.normal_vec(dim));
        offsets.push(0.5 * rng.normal());
    }
    let x0 = rng.in_ball(&vec![0.0; dim], radius);

    let w = smooth_weight;
    let m_smooth = w * curvature.iter().map(|c| 1.0 - c).fold(0.0, f64::max);
    let lip = w * curvature.iter().map(|c| 1.0 + c).fold(0.0, f64::max);
    let mut diam = 0.0_f64;
    for (k, gk) in slopes.chunks_exact(dim).enumerate() {
        for gl in slopes.chunks_exact(dim).skip(k + 1) {
            diam = diam.max(linalg::dist(gk, gl));
        }
    }
    let big_m = 0.5 * diam;
    // cos ≥ −1 and c_j ≥ 0; each affine piece is bounded below on the ball
    let mut lower = -w * dim as f64;
    if kink_count > 0 {
        lower += slopes
            .chunks_exact(dim)
            .zip(&offsets)
            .map(|(gk, ek)| ek - radius * linalg::norm(gk))
            .fold(f64::NEG_INFINITY, f64::max);
    }
    let file = InstanceFile {
        name: format!("hybrid_d{dim}_k{kink_count}_s{seed}"),
        seed,
        params: GeneratorParams::HybridSynthetic {
            dim,
            smooth_weight,
            kink_count,
            radius,
        },
        h,
        constants: DeclaredConstants {
            m: m_smooth.max(MIN_HYBRID_MODULUS),
            big_m,
            lip,
            phi_star_lower: lower,
            rule: format!(
                "m = max(w·max(1 − c_j), {MIN_HYBRID_MODULUS}); L = w·max(1 + c_j); M = diam(slopes)/2"
            ),
        },
        planted: None,
        x0,
        data: InstanceData::HybridSynthetic {
            dim,
            weight: w,
            curvature,
            phase,
            slopes,
            offsets,
        },
    };
    Instance::from_file(file)
}

/// Convex quadratic `½(x − x*)ᵀQ(x − x*)` with `Q = BᵀB/dim + I/10`,
/// unconstrained, declared with the given (small) `m`.
///
/// `L` is the Frobenius norm of `Q`, an upper bound on its spectral norm.
pub fn gen_convex_qp(dim: usize, seed: u64, m: f64) -> Result<Instance> {
    check_dims(dim, 1)?;
    let mut rng = SeededRng::new(seed);
    let bmat: Vec<f64> = rng.normal_vec(dim * dim);
    let mut q = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let s: f64 = (0..dim).map(|k| bmat[k * dim + i] * bmat[k * dim + j]).sum();
            q[i * dim + j] = s / dim as f64 + if i == j { 0.1 } else { 0.0 };
        }
    }
    let center = rng.normal_vec(dim);
    let x0 = linalg::add_scaled(&center, 1.0, &rng.normal_vec(dim));
    let lip = linalg::norm(&q);
    let file = InstanceFile {
        name: format!("convex_qp_d{dim}_s{seed}"),
        seed,
        params: GeneratorParams::ConvexQp { dim, m },
        h: SimpleTerm::zero(dim),
        constants: DeclaredConstants {
            m,
            big_m: 0.0,
            lip,
            phi_star_lower: 0.0,
            rule: "convex: any m > 0; L = ‖Q‖_F".into(),
        },
        planted: Some(center.clone()),
        x0,
        data: InstanceData::Quadratic { dim, q, center },
    };
    Instance::from_file(file)
}
