// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! Run several solver configs on one instance and tabulate the results.

use std::io::Write;
use std::path::Path;

use super::config::RunConfig;
use super::run::{execute_on, RunOutcome};
use crate::error::{PbfError, Result};

pub const COMPARE_COLUMNS: [&str; 8] = [
    "solver",
    "status",
    "total_iterations",
    "serious_steps",
    "oracle_calls",
    "moreau_grad",
    "budget_total",
    "budget_ratio",
];

/// Configs must agree on the instance and the tolerance.
pub fn check_compatible(cfgs: &[RunConfig]) -> Result<()> {
    if cfgs.len() < 2 {
        return Err(PbfError::Malformed("compare needs at least two configs".into()));
    }
    let first = &cfgs[0];
    for c in &cfgs[1..] {
        if c.instance != first.instance || (first.instance.generate.is_some() && c.seed != first.seed) {
            return Err(PbfError::Malformed("configs refer to different instances".into()));
        }
        if c.tolerance != first.tolerance {
            return Err(PbfError::Malformed("configs use different tolerances".into()));
        }
    }
    Ok(())
}

/// Run every config in parallel; each writes into `out_dir/<index>-<solver>`.
pub fn compare(cfgs: &[RunConfig], out_dir: &Path) -> Result<Vec<RunOutcome>> {
    check_compatible(cfgs)?;
    let instance = cfgs[0].load_instance()?;
    let cfgs: Vec<RunConfig> = cfgs
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.output.verify_moreau = true;
            c
        })
        .collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = cfgs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let dir = out_dir.join(format!("{i}-{}", c.solver.name()));
                let instance = &instance;
                s.spawn(move || execute_on(c, instance, &dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    })
}

pub fn write_table(outcomes: &[RunOutcome], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COMPARE_COLUMNS)?;
    for o in outcomes {
        let s = &o.summary;
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.6e}")).unwrap_or_default();
        let ratio = s.budget_total.map(|b| s.iterations as f64 / b as f64);
        w.write_record([
            s.solver.name().to_string(),
            s.status.clone(),
            s.iterations.to_string(),
            s.serious_steps.map(|k| k.to_string()).unwrap_or_default(),
            s.oracle_calls.to_string(),
            opt(s.measured_moreau),
            s.budget_total.map(|b| b.to_string()).unwrap_or_default(),
            opt(ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}
