// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! Trace CSV: `# key = value` header lines, then one row per iteration.
//!
//! Floats use 17 significant digits so a trace can be re-audited exactly.
//! Vector columns hold `;`-separated components; absent values are empty.

use std::io::{Read, Write};

use crate::error::{PbfError, Result};
use crate::pbf::{TraceRow, TraceSink};

pub const COLUMNS: [&str; 23] = [
    "j",
    "k",
    "serious",
    "t",
    "theta",
    "delta",
    "step_norm",
    "phi",
    "n_cuts",
    "sub_gap",
    "eps_hat",
    "w_norm",
    "delta_k",
    "cycle_len",
    "t_first",
    "dist_y_xhat",
    "dist_y_prev",
    "x_hat_prev",
    "x_hat",
    "y_hat",
    "v_hat",
    "w_hat",
    "wall_ms",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_f(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn opt_u<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_v(x: &Option<Vec<f64>>) -> String {
    x.as_ref()
        .map(|v| v.iter().map(|c| fmt_f64(*c)).collect::<Vec<_>>().join(";"))
        .unwrap_or_default()
}

fn record(row: &TraceRow) -> [String; 23] {
    [
        row.j.to_string(),
        opt_u(row.k),
        opt_u(row.serious),
        opt_f(row.t),
        opt_f(row.theta),
        opt_f(row.delta),
        fmt_f64(row.step_norm),
        fmt_f64(row.phi),
        opt_u(row.n_cuts),
        opt_f(row.sub_gap),
        opt_f(row.eps_hat),
        opt_f(row.w_norm),
        opt_f(row.delta_k),
        opt_u(row.cycle_len),
        opt_f(row.t_first),
        opt_f(row.dist_y_xhat),
        opt_f(row.dist_y_prev),
        opt_v(&row.x_hat_prev),
        opt_v(&row.x_hat),
        opt_v(&row.y_hat),
        opt_v(&row.v_hat),
        opt_v(&row.w_hat),
        opt_f(row.wall_ms),
    ]
}

/// Streams rows to a CSV writer.
pub struct CsvTraceSink<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> CsvTraceSink<W> {
    pub fn new(mut inner: W, header: &[(String, String)]) -> Result<Self> {
        for (k, v) in header {
            writeln!(inner, "# {k} = {v}")?;
        }
        let mut writer = csv::Writer::from_writer(inner);
        writer.write_record(COLUMNS)?;
        Ok(Self { writer })
    }

    pub fn finish(self) -> Result<W> {
        self.writer
            .into_inner()
            .map_err(|e| PbfError::Io(std::io::Error::other(e.to_string())))
    }
}

impl<W: Write> TraceSink for CsvTraceSink<W> {
    fn record(&mut self, row: &TraceRow) -> Result<()> {
        self.writer.write_record(record(row))?;
        Ok(())
    }
}

/// A parsed trace file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceFile {
    pub header: Vec<(String, String)>,
    pub rows: Vec<TraceRow>,
}

impl TraceFile {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn bad(line: usize, what: &str) -> PbfError {
    PbfError::Malformed(format!("trace row {line}: bad {what}"))
}

fn p_f(s: &str, line: usize, col: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| bad(line, col))
}

fn p_u<T: std::str::FromStr>(s: &str, line: usize, col: &str) -> Result<Option<T>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| bad(line, col))
}

fn p_v(s: &str, line: usize, col: &str) -> Result<Option<Vec<f64>>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.split(';')
        .map(|c| c.parse().map_err(|_| bad(line, col)))
        .collect::<Result<Vec<f64>>>()
        .map(Some)
}

pub fn read_trace(mut input: impl Read) -> Result<TraceFile> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut header = Vec::new();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let Some(rest) = line.strip_prefix("# ") else { break };
        let (k, v) = rest
            .trim_end_matches(['\n', '\r'])
            .split_once(" = ")
            .ok_or_else(|| PbfError::Malformed(format!("bad header line: {line}")))?;
        header.push((k.to_string(), v.to_string()));
        body_start += line.len();
    }
    let mut reader = csv::Reader::from_reader(&text.as_bytes()[body_start..]);
    let cols = reader.headers()?.clone();
    if cols.iter().ne(COLUMNS.iter().copied()) {
        return Err(PbfError::Malformed("unexpected trace columns".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let f = |c: usize| rec.get(c).unwrap_or("");
        let line = i + 1;
        rows.push(TraceRow {
            j: p_u(f(0), line, "j")?.ok_or_else(|| bad(line, "j"))?,
            k: p_u(f(1), line, "k")?,
            serious: p_u(f(2), line, "serious")?,
            t: p_f(f(3), line, "t")?,
            theta: p_f(f(4), line, "theta")?,
            delta: p_f(f(5), line, "delta")?,
            step_norm: p_f(f(6), line, "step_norm")?.unwrap_or(f64::NAN),
            phi: p_f(f(7), line, "phi")?.unwrap_or(f64::NAN),
            n_cuts: p_u(f(8), line, "n_cuts")?,
            sub_gap: p_f(f(9), line, "sub_gap")?,
            eps_hat: p_f(f(10), line, "eps_hat")?,
            w_norm: p_f(f(11), line, "w_norm")?,
            delta_k: p_f(f(12), line, "delta_k")?,
            cycle_len: p_u(f(13), line, "cycle_len")?,
            t_first: p_f(f(14), line, "t_first")?,
            dist_y_xhat: p_f(f(15), line, "dist_y_xhat")?,
            dist_y_prev: p_f(f(16), line, "dist_y_prev")?,
            x_hat_prev: p_v(f(17), line, "x_hat_prev")?,
            x_hat: p_v(f(18), line, "x_hat")?,
            y_hat: p_v(f(19), line, "y_hat")?,
            v_hat: p_v(f(20), line, "v_hat")?,
            w_hat: p_v(f(21), line, "w_hat")?,
            wall_ms: p_f(f(22), line, "wall_ms")?,
        });
    }
    Ok(TraceFile { header, rows })
}
