// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! Experiment harness: run configuration, trace files, the `pbf` CLI.

pub mod cli;
pub mod compare;
pub mod config;
pub mod run;
pub mod trace_csv;

pub use config::{RunConfig, SolverKind};
pub use run::{execute, execute_on, RunOutcome, Summary};
pub use trace_csv::{read_trace, CsvTraceSink, TraceFile};
