// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! The proximal bundle loop: cycles of null steps closed by a serious step.

pub mod audit;
pub mod budget;
pub mod params;
pub mod solver;
pub mod trace;

pub use audit::{check_trace, AuditContext, AuditMode, AuditReport, Auditor, CheckKind};
pub use budget::{complexity_budget, ComplexityBudget};
pub use params::{derive_params, PbfParams, Tolerances};
pub use solver::{run, PbfReport, RunOptions, RunStatus, SeriousRecord};
pub use trace::{NullSink, TraceRow, TraceSink};
