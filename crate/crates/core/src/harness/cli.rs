// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! `pbf` command line: `run`, `gen`, `audit` and `compare`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::compare::{compare, write_table};
use super::config::{InstanceSpec, Overrides, OutputSpec, RunConfig, SolverKind, ToleranceSpec};
use super::run::{execute, AuditSummary, EXIT_AUDIT, EXIT_MALFORMED, EXIT_OK};
use super::trace_csv::read_trace;
use crate::bundle::ResetPolicy;
use crate::error::{PbfError, Result};
use crate::pbf::{check_trace, AuditContext, AuditMode};
use crate::problems::{gen_convex_qp, gen_hybrid_synthetic, gen_phase_retrieval, PhaseDomain};

#[derive(Debug, Parser)]
#[command(name = "pbf", version, about = "Proximal bundle method for hybrid weakly convex problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance.
    Run(RunArgs),
    /// Write a generated instance to JSON.
    Gen(GenArgs),
    /// Re-check a trace file against its recorded constants.
    Audit {
        trace: PathBuf,
    },
    /// Run several configs on the same instance and print a table.
    Compare {
        #[arg(required = true, num_args = 2..)]
        configs: Vec<PathBuf>,
        #[arg(long, default_value = "compare")]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML config; the flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub solver: Option<SolverKind>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub eta_bar: Option<f64>,
    #[arg(long)]
    pub eps_bar: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub chi: Option<f64>,
    #[arg(long)]
    pub max_cuts: Option<usize>,
    #[arg(long)]
    pub subproblem_tol: Option<f64>,
    /// `warn` or `fail`.
    #[arg(long)]
    pub audit: Option<String>,
    /// `fresh-cut` or `shifted-max`.
    #[arg(long)]
    pub reset: Option<String>,
    #[arg(long)]
    pub max_iters: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub verify_moreau: bool,
    #[arg(long)]
    pub wall_time: bool,
    #[arg(long)]
    pub ps_gamma: Option<f64>,
    #[arg(long)]
    pub ps_iters: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(subcommand)]
    pub kind: GenKind,
    #[arg(long, global = true, default_value = "instance.json")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Sample-check the declared constants before writing.
    #[arg(long, global = true)]
    pub verify: bool,
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    PhaseRetrieval {
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Box half-width; the default domain is the ball of radius 2.
        #[arg(long)]
        box_half_width: Option<f64>,
    },
    Hybrid {
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        smooth_weight: f64,
        #[arg(long, default_value_t = 5)]
        kinks: usize,
    },
    ConvexQp {
        #[arg(long, default_value_t = 5)]
        dim: usize,
        #[arg(long, default_value_t = 1e-6)]
        m: f64,
    },
}

fn parse_kebab<T: serde::de::DeserializeOwned>(s: &str, what: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| PbfError::Malformed(format!("unknown {what} `{s}`")))
}

/// Merge the flags into the config file (or a fresh config).
pub fn build_config(a: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig {
            solver: a
                .solver
                .ok_or_else(|| PbfError::Malformed("--solver is required without --config".into()))?,
            seed: 0,
            instance: InstanceSpec::default(),
            tolerance: ToleranceSpec::default(),
            overrides: Overrides::default(),
            output: OutputSpec::default(),
        },
    };
    if let Some(s) = a.solver {
        cfg.solver = s;
    }
    if let Some(p) = &a.instance {
        cfg.instance = InstanceSpec {
            path: Some(p.clone()),
            generate: None,
        };
    }
    if a.rho.is_some() {
        cfg.tolerance = ToleranceSpec {
            rho: a.rho,
            ..Default::default()
        };
    }
    if a.eta_bar.is_some() || a.eps_bar.is_some() {
        cfg.tolerance.rho = None;
        cfg.tolerance.eta_bar = a.eta_bar.or(cfg.tolerance.eta_bar);
        cfg.tolerance.eps_bar = a.eps_bar.or(cfg.tolerance.eps_bar);
    }
    let o = &mut cfg.overrides;
    o.lambda = a.lambda.or(o.lambda);
    o.chi = a.chi.or(o.chi);
    o.max_cuts = a.max_cuts.or(o.max_cuts);
    o.subproblem_tol = a.subproblem_tol.or(o.subproblem_tol);
    o.max_total_iters = a.max_iters.or(o.max_total_iters);
    o.ps_gamma = a.ps_gamma.or(o.ps_gamma);
    o.ps_iters = a.ps_iters.or(o.ps_iters);
    if let Some(s) = &a.audit {
        o.audit = Some(parse_kebab::<AuditMode>(s, "audit mode")?);
    }
    if let Some(s) = &a.reset {
        o.reset = Some(parse_kebab::<ResetPolicy>(s, "reset policy")?);
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(d) = &a.out_dir {
        cfg.output.dir = Some(d.clone());
    }
    cfg.output.verify_moreau |= a.verify_moreau;
    cfg.output.wall_time |= a.wall_time;
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(a: &RunArgs) -> Result<i32> {
    let cfg = build_config(a)?;
    let out = execute(&cfg)?;
    let s = &out.summary;
    println!(
        "{} on {}: {} after {} iterations ({} oracle calls)",
        s.solver.name(),
        s.instance,
        s.status,
        s.iterations,
        s.oracle_calls
    );
    if let Some(c) = &s.certificate {
        println!("  ‖ŵ‖ = {:.3e}  ε̂ = {:.3e}  φ(ŷ) = {:.6e}", c.w_norm, c.eps_hat, c.phi);
    }
    if let Some(g) = s.measured_moreau {
        println!("  measured ‖∇M̂^(1/m)‖ = {g:.3e}");
    }
    print!("{}", out.audit.render());
    println!("  wrote {}", out.summary_path.display());
    Ok(out.exit_code)
}

fn cmd_gen(a: &GenArgs) -> Result<i32> {
    let inst = match a.kind {
        GenKind::PhaseRetrieval {
            n,
            dim,
            noise,
            box_half_width,
        } => {
            let domain = match box_half_width {
                Some(half_width) => PhaseDomain::Box { half_width },
                None => PhaseDomain::default(),
            };
            gen_phase_retrieval(n, dim, a.seed, noise, domain)?
        }
        GenKind::Hybrid {
            dim,
            smooth_weight,
            kinks,
        } => gen_hybrid_synthetic(dim, a.seed, smooth_weight, kinks)?,
        GenKind::ConvexQp { dim, m } => gen_convex_qp(dim, a.seed, m)?,
    };
    let c = &inst.file.constants;
    println!("{}: m = {:.6e}  M = {:.6e}  L = {:.6e}", inst.name(), c.m, c.big_m, c.lip);
    let mut code = EXIT_OK;
    if a.verify {
        let (hyb, wc) = inst.verify(10_000, a.seed);
        println!(
            "  hybrid condition: {} violations / {} samples; weak convexity: {} / {}",
            hyb.violations, hyb.samples, wc.violations, wc.samples
        );
        if !(hyb.passed() && wc.passed()) {
            code = EXIT_AUDIT;
        }
    }
    inst.save(&a.out)?;
    println!("  wrote {}", a.out.display());
    Ok(code)
}

fn cmd_audit(path: &Path) -> Result<i32> {
    let file = std::fs::File::open(path)?;
    let trace = read_trace(std::io::BufReader::new(file))?;
    let Some(ctx) = trace.get("audit_context") else {
        return Err(PbfError::Malformed("trace has no audit_context header".into()));
    };
    let ctx: AuditContext = serde_json::from_str(ctx)?;
    let report = check_trace(ctx, &trace.rows);
    let solver: SolverKind = parse_kebab(trace.get("solver").unwrap_or(""), "solver")?;
    print!("{}", AuditSummary::from_report(solver, AuditMode::Warn, &report).render());
    Ok(if report.passed() { EXIT_OK } else { EXIT_AUDIT })
}

fn cmd_compare(paths: &[PathBuf], out_dir: &Path) -> Result<i32> {
    let cfgs = paths.iter().map(|p| RunConfig::load(p)).collect::<Result<Vec<_>>>()?;
    let outcomes = compare(&cfgs, out_dir)?;
    write_table(&outcomes, std::io::stdout().lock())?;
    Ok(outcomes.iter().map(|o| o.exit_code).max().unwrap_or(EXIT_OK))
}

/// Dispatch a parsed command; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Audit { trace } => cmd_audit(trace),
        Command::Compare { configs, out_dir } => cmd_compare(configs, out_dir),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_MALFORMED
        }
    }
}
