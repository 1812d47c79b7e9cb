// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration.
//!
//! ```toml
//! solver = "pbf-multicut"
//! seed = 7
//!
//! [instance]
//! path = "pr10.json"
//!
//! [tolerance]
//! rho = 0.5
//!
//! [overrides]
//! audit = "fail"
//!
//! [output]
//! dir = "out"
//! verify_moreau = true
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bundle::{ResetPolicy, Scheme};
use crate::error::{PbfError, Result};
use crate::pbf::{AuditMode, Tolerances};
use crate::problems::{GeneratorParams, Instance};

/// Env var that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "PBF_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    PbfOnecut,
    PbfTwocut,
    PbfMulticut,
    Ps,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::PbfOnecut => "pbf-onecut",
            SolverKind::PbfTwocut => "pbf-twocut",
            SolverKind::PbfMulticut => "pbf-multicut",
            SolverKind::Ps => "ps",
        }
    }

    /// Bundle scheme, `None` for PS.
    pub fn scheme(&self, max_cuts: Option<usize>) -> Option<Scheme> {
        match self {
            SolverKind::PbfOnecut => Some(Scheme::OneCut),
            SolverKind::PbfTwocut => Some(Scheme::TwoCut),
            SolverKind::PbfMulticut => Some(match max_cuts {
                Some(n) => Scheme::MultiCut { max_cuts: Some(n) },
                None => Scheme::multi_default(),
            }),
            SolverKind::Ps => None,
        }
    }
}

/// Exactly one of `path` and `generate`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub path: Option<PathBuf>,
    pub generate: Option<GeneratorParams>,
}

/// Either `rho` (the `η̄ = ρ/8`, `ε̄ = ρ²/(2592m)` preset) or both of
/// `eta_bar` and `eps_bar`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub rho: Option<f64>,
    pub eta_bar: Option<f64>,
    pub eps_bar: Option<f64>,
}

impl ToleranceSpec {
    pub fn resolve(&self, m: f64) -> Result<Tolerances> {
        match (self.rho, self.eta_bar, self.eps_bar) {
            (Some(rho), None, None) => Tolerances::from_rho(rho, m),
            (None, Some(eta), Some(eps)) => Tolerances::new(eta, eps),
            _ => Err(PbfError::Malformed(
                "tolerance needs either `rho` or both `eta_bar` and `eps_bar`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub chi: Option<f64>,
    pub max_cuts: Option<usize>,
    pub subproblem_tol: Option<f64>,
    pub audit: Option<AuditMode>,
    pub reset: Option<ResetPolicy>,
    pub max_total_iters: Option<u64>,
    pub moreau_tol: Option<f64>,
    /// PS stepsize parameter, default `1/(2m)`.
    pub ps_gamma: Option<f64>,
    /// PS iteration count `T`, default from the iteration-count rule.
    pub ps_iters: Option<u64>,
    pub ps_m_bar: Option<f64>,
    /// Largest `T` for which the PS averaged-bound audit is evaluated.
    pub ps_audit_max_iters: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    pub trace: String,
    pub summary: String,
    pub audit: String,
    pub verify_moreau: bool,
    pub wall_time: bool,
    /// Sample count of the certificate inclusion check (with `verify_moreau`).
    pub certificate_samples: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            trace: "trace.csv".into(),
            summary: "summary.json".into(),
            audit: "audit.json".into(),
            verify_moreau: false,
            wall_time: false,
            certificate_samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub solver: SolverKind,
    #[serde(default)]
    pub seed: u64,
    pub instance: InstanceSpec,
    #[serde(default)]
    pub tolerance: ToleranceSpec,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| PbfError::Malformed(e.to_string()))
    }

    /// Load a config; relative paths inside resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PbfError::Malformed(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = &cfg.instance.path {
            if p.is_relative() {
                cfg.instance.path = Some(base.join(p));
            }
        }
        if let Some(d) = &cfg.output.dir {
            if d.is_relative() {
                cfg.output.dir = Some(base.join(d));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| PbfError::Malformed(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.instance.path, &self.instance.generate) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => {
                return Err(PbfError::Malformed(
                    "instance needs exactly one of `path` and `generate`".into(),
                ))
            }
        }
        let t = &self.tolerance;
        if self.solver == SolverKind::Ps {
            if t.rho.is_none() && self.overrides.ps_iters.is_none() {
                return Err(PbfError::Malformed("ps needs `rho` or `overrides.ps_iters`".into()));
            }
        } else if t.rho.is_none() && (t.eta_bar.is_none() || t.eps_bar.is_none()) {
            return Err(PbfError::Malformed("tolerance spec missing".into()));
        }
        Ok(())
    }

    pub fn load_instance(&self) -> Result<Instance> {
        match (&self.instance.path, &self.instance.generate) {
            (Some(p), None) => Instance::load(p),
            (None, Some(g)) => g.generate(self.seed),
            _ => Err(PbfError::Malformed("instance needs exactly one of `path` and `generate`".into())),
        }
    }

    /// `PBF_OUTPUT_DIR`, then the configured directory, then `.`.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.output.dir.clone().unwrap_or_else(|| PathBuf::from(".")),
        }
    }
}
