// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = PbfError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PbfError {
    #[error("point outside dom h")]
    OutsideDomain,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate active set")]
    DegenerateActiveSet,

    #[error("subproblem not converged (gap {gap:.3e} after {iterations} dual steps)")]
    SubproblemNotConverged { gap: f64, iterations: usize },

    #[error("Moreau oracle not converged (certified distance {achieved:.3e} > tol {tol:.3e})")]
    MoreauNotConverged { achieved: f64, tol: f64 },

    #[error("budget requires a lower bound on φ*")]
    MissingLowerBound,

    #[error("audit violation: {0}")]
    AuditViolation(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl PbfError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        PbfError::InvalidParameter(msg.into())
    }
}
