//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration or input error,
//! 3 numerical or domain error (including integrations that stop early).

pub mod config;
pub mod verify;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::connection::{nonlinear_connection, spray_coefficients};
use crate::dynamics::{integrate, Flow, Trajectory};
use crate::einstein::{self, SweepRow};
use crate::error::{Error, Result};
use crate::finsler::{energy_density, inverse_metric, metric_tensor, validate_finsler, PhasePoint};
use crate::kahler::{self, LiouvilleForms};
use crate::sampling::{sample_points, BuiltinMetric};

use config::{parse_config, RunConfig, SystemType, DEFAULT_SAMPLES};
use verify::{run_verification, VerifyOptions};

/// Largest integrability defect accepted by `einstein`.
pub const EINSTEIN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "finsler-kahler", version, about = "Finsler metrics, their almost Kähler model and its dynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Sampling seed; overrides `seed` in the config
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Sample points per metric for validate and verify
    #[arg(long, global = true, value_name = "N")]
    pub samples: Option<usize>,
    /// Output format; also switches error reports to JSON when set to `json`.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Suppress the summary line on standard error.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the Finsler conditions on random samples.
    Validate,
    /// Dump the geometric objects at the initial point.
    Derive,
    /// Integrate the configured Euler-Lagrange or Hamilton flow.
    Simulate,
    /// Run the invariant suite.
    Verify,
    /// Sweep the integrability identity of the Einstein corollaries.
    Einstein,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Expression(_) | Error::Io(_) | Error::Parameter(_) | Error::Dimension { .. } => 2,
        _ => 3,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain { .. } => "domain",
        Error::Order { .. } => "order",
        Error::NullSection => "null-section",
        Error::Regularity(_) => "regularity",
        Error::DegenerateLagrangian { .. } => "degenerate-lagrangian",
        Error::Parameter(_) => "parameter",
        Error::DegenerateParameters(_) => "degenerate-parameters",
        Error::Dimension { .. } => "dimension",
        Error::NullCrossing { .. } => "null-crossing",
        Error::StepUnderflow { .. } => "step-underflow",
        Error::SolverDivergence { .. } => "solver-divergence",
        Error::Expression(_) => "expression",
        Error::Config { .. } => "config",
        Error::Io(_) => "io",
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<&'a str>,
    exit_code: i32,
}

fn report_error(e: &Error, json: bool) {
    let code = exit_code(e);
    if json {
        let path = match e {
            Error::Config { path, .. } => Some(path.as_str()),
            _ => None,
        };
        let report = ErrorReport {
            error: error_kind(e),
            message: e.to_string(),
            path,
            exit_code: code,
        };
        eprintln!("{}", serde_json::to_string(&report).expect("error report serializes"));
    } else {
        eprintln!("error: {e}");
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let json_errors = cli.format == Some(Format::Json);
    match execute(&cli) {
        Ok(status) => status,
        Err(e) => {
            report_error(&e, json_errors);
            exit_code(&e)
        }
    }
}

/// Loads the configuration named on the command line, or the defaults.
pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::config("<file>", format!("cannot read {}: {e}", p.display())))?;
            parse_config(&text)
        }
        None => parse_config(""),
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let cfg = load_config(cli.config.as_deref())?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let samples = cli
        .samples
        .or_else(|| cfg.sampling.as_ref().and_then(|s| s.samples))
        .unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(Error::config("samples", "need at least one sample"));
    }
    let out_path = cli.out.clone().or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    let json_only = matches!(cli.command, Command::Validate | Command::Derive | Command::Verify);
    if json_only && cli.format == Some(Format::Csv) {
        return Err(Error::config("format", "this command only produces JSON"));
    }
    let format = cli.format.unwrap_or(if json_only { Format::Json } else { Format::Csv });
    let ctx = Context {
        cfg: &cfg,
        seed,
        samples,
        format,
        quiet: cli.quiet,
        out: out_path,
    };
    match cli.command {
        Command::Validate => validate(&ctx),
        Command::Derive => derive(&ctx),
        Command::Simulate => simulate(&ctx),
        Command::Verify => verify_command(&ctx),
        Command::Einstein => einstein_command(&ctx),
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    seed: u64,
    samples: usize,
    format: Format,
    quiet: bool,
    out: Option<PathBuf>,
}

impl Context<'_> {
    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn write_json<T: Serialize>(&self, value: &T) -> Result<()> {
        let mut w = self.writer()?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.into()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn validate(ctx: &Context) -> Result<i32> {
    let f = ctx.cfg.fundamental_function()?;
    let domain = ctx.cfg.sample_box(&f)?;
    let points = sample_points(&domain, ctx.samples, ctx.seed, 0)?;
    let report = validate_finsler(&f, &points);
    ctx.write_json(&report)?;
    let ok = report.passed();
    ctx.note(format!(
        "validate: {} on {} samples: {}",
        report.metric,
        report.samples,
        if ok { "pass" } else { "FAIL" }
    ));
    Ok(if ok { 0 } else { 1 })
}

/// Geometric objects at one phase point. Adapted tensors are given as full
/// `2n × 2n` matrices in the adapted frame.
#[derive(Debug, Serialize)]
pub struct Derivation {
    pub metric: String,
    pub a: f64,
    pub point: PhasePoint,
    pub norm: f64,
    pub energy_density: f64,
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub g: DMatrix<f64>,
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub g_inverse: DMatrix<f64>,
    pub spray: Vec<f64>,
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub connection: DMatrix<f64>,
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub frame: DMatrix<f64>,
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub coframe: DMatrix<f64>,
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub sasaki_lift: DMatrix<f64>,
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub homogeneous_lift: DMatrix<f64>,
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub almost_complex: DMatrix<f64>,
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub homogeneous_almost_complex: DMatrix<f64>,
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub theta: DMatrix<f64>,
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub hamiltonian_two_form: DMatrix<f64>,
    pub liouville: LiouvilleForms,
    pub hermitian_defect: f64,
    pub involution_defect: f64,
}

pub fn derivation(cfg: &RunConfig) -> Result<Derivation> {
    let f = cfg.fundamental_function()?;
    let m = cfg.model_params()?;
    let (p, _, _) = cfg.initial_point()?;
    let mt = metric_tensor(&f, &p)?;
    let conn = nonlinear_connection(&f, &p)?;
    let frame = conn.frame();
    let j = kahler::homogeneous_almost_complex(&f, &p, &m)?;
    Ok(Derivation {
        metric: f.name(),
        a: m.a,
        norm: f.norm(&p)?,
        energy_density: energy_density(&f, &p)?,
        g_inverse: inverse_metric(&mt)?,
        g: mt.g,
        spray: spray_coefficients(&f, &p)?.as_slice().to_vec(),
        connection: conn.coefficients.clone(),
        frame: frame.frame,
        coframe: frame.coframe,
        sasaki_lift: kahler::sasaki_lift(&f, &p)?.full(),
        homogeneous_lift: kahler::homogeneous_lift(&f, &p, &m)?.full(),
        almost_complex: kahler::almost_complex(&f, &p)?.full(),
        homogeneous_almost_complex: j.full(),
        theta: kahler::symplectic_form_theta(&f, &p)?.full(),
        hamiltonian_two_form: kahler::hamiltonian_two_form(&f, &p, &m)?.full(),
        liouville: kahler::liouville_one_form(&f, &p, &m)?,
        hermitian_defect: kahler::hermitian_defect(&f, &p, &m)?,
        involution_defect: kahler::square_defect(&j),
        point: p,
    })
}

fn derive(ctx: &Context) -> Result<i32> {
    let d = derivation(ctx.cfg)?;
    ctx.write_json(&d)?;
    ctx.note(format!("derive: {} at {}", d.metric, d.point));
    Ok(0)
}

/// Integrates the configured flow.
pub fn simulate_config(cfg: &RunConfig) -> Result<Trajectory> {
    let (p0, t0, t1) = cfg.initial_point()?;
    let flow: Box<dyn Flow> = match cfg.system_config()?.kind {
        SystemType::Lagrange => Box::new(cfg.lagrange_flow()?),
        SystemType::Hamilton => Box::new(cfg.hamilton_flow()?),
    };
    integrate(flow.as_ref(), &p0, t0, t1, &cfg.integrator)
}

fn write_trajectory(ctx: &Context, tr: &Trajectory) -> Result<()> {
    match ctx.format {
        Format::Csv => {
            let mut w = ctx.writer()?;
            tr.write_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
        Format::Json => ctx.write_json(tr),
    }
}

fn simulate(ctx: &Context) -> Result<i32> {
    match simulate_config(ctx.cfg) {
        Ok(tr) => {
            write_trajectory(ctx, &tr)?;
            if let Some(last) = tr.last() {
                ctx.note(format!("simulate: {} samples, final t = {} at {}", tr.len(), last.t, last.point));
            }
            Ok(0)
        }
        Err(e) => {
            if let Some(partial) = e.partial_trajectory() {
                write_trajectory(ctx, partial)?;
            }
            Err(e)
        }
    }
}

fn verify_command(ctx: &Context) -> Result<i32> {
    let mut opts = VerifyOptions::new(ctx.seed, ctx.samples);
    if ctx.cfg.metric.is_some() {
        let f = ctx.cfg.fundamental_function()?;
        let domain = ctx.cfg.sample_box(&f)?;
        opts.metrics = vec![BuiltinMetric {
            name: f.name(),
            metric: f,
            domain,
        }];
    }
    let a = ctx.cfg.model.a;
    if !opts.a_values.contains(&a) {
        opts.a_values.push(a);
    }
    let report = run_verification(&opts)?;
    ctx.write_json(&report)?;
    let failed = report.failures().count();
    ctx.note(format!(
        "verify: {}/{} invariants pass",
        report.entries.len() - failed,
        report.entries.len()
    ));
    Ok(if report.pass { 0 } else { 1 })
}

/// The sweep described by the `[einstein]` section, or the default grid.
pub fn einstein_rows(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let e = cfg.einstein.clone().unwrap_or_default();
    let (lo, hi) = e.t_range()?;
    for &a in &e.a_values {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::config("einstein.A", format!("A must be positive, got {a}")));
        }
    }
    if let Some(c) = e.c.iter().find(|c| !c.is_finite()) {
        return Err(Error::config("einstein.c", format!("c must be finite, got {c}")));
    }
    Ok(einstein::sweep(&e.a_values, &e.c, &einstein::t_grid(lo, hi)))
}

fn einstein_command(ctx: &Context) -> Result<i32> {
    let rows = einstein_rows(ctx.cfg)?;
    match ctx.format {
        Format::Csv => {
            let mut w = ctx.writer()?;
            einstein::write_sweep_csv(&rows, &mut w)?;
            w.flush()?;
        }
        Format::Json => ctx.write_json(&rows)?,
    }
    let valid: Vec<&SweepRow> = rows.iter().filter(|r| r.domain_ok).collect();
    let worst = valid.iter().map(|r| r.defect).fold(0.0f64, |a, d| if d.is_nan() { f64::INFINITY } else { a.max(d) });
    ctx.note(format!(
        "einstein: {} rows, {} in the valid domain, max defect {worst:e}",
        rows.len(),
        valid.len()
    ));
    Ok(if worst <= EINSTEIN_TOLERANCE { 0 } else { 1 })
}
