// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One iteration of a run.
///
/// PBF fills every scalar column; certificate columns are present on serious
/// rows only. PS rows leave the bundle columns empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub j: u64,
    pub k: Option<u64>,
    pub serious: Option<bool>,
    pub t: Option<f64>,
    pub theta: Option<f64>,
    pub delta: Option<f64>,
    /// `‖x_j − x̂_{k−1}‖`
    pub step_norm: f64,
    /// `φ` at the iterate (PBF: at `y_j`).
    pub phi: f64,
    pub n_cuts: Option<usize>,
    pub sub_gap: Option<f64>,
    pub eps_hat: Option<f64>,
    pub w_norm: Option<f64>,
    pub delta_k: Option<f64>,
    pub cycle_len: Option<u64>,
    /// `t_{i_k}`, the first gap of the cycle.
    pub t_first: Option<f64>,
    /// `‖ŷ_k − x̂_k‖`
    pub dist_y_xhat: Option<f64>,
    /// `‖ŷ_k − x̂_{k−1}‖`
    pub dist_y_prev: Option<f64>,
    pub x_hat_prev: Option<Vec<f64>>,
    pub x_hat: Option<Vec<f64>>,
    pub y_hat: Option<Vec<f64>>,
    pub v_hat: Option<Vec<f64>>,
    pub w_hat: Option<Vec<f64>>,
    pub wall_ms: Option<f64>,
}

/// Destination for trace rows. A single producer appends in order.
pub trait TraceSink {
    fn record(&mut self, row: &TraceRow) -> Result<()>;
}

impl TraceSink for Vec<TraceRow> {
    fn record(&mut self, row: &TraceRow) -> Result<()> {
        self.push(row.clone());
        Ok(())
    }
}

/// Discards rows.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _: &TraceRow) -> Result<()> {
        Ok(())
    }
}
