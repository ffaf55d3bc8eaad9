//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage and validation errors (raised before
//! any solve starts), 3 for solver and I/O failures.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::diagnostics::{brezis_lieb_defect, local_mass_sup, FieldSequence};
use crate::error::Error;
use crate::grid::{build_radial_grid, dilate, sample, Field, Grading, Grid};
use crate::nonlin::{critical_exponent, Nonlinearity};
use crate::pohozaev::{energy, log_sobolev_gap, optimal_alpha, sharp_constant};
use crate::solver::{
    continuation, default_r_max, pde_residual, verify_nonradial_gap, EpsSchedule, GapOptions,
    SolveOptions, SolveResult,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

/// Profile points kept in JSON output unless `--full-profile` is set.
const PROFILE_POINTS: usize = 512;

#[derive(Parser, Debug)]
#[command(name = "groundstate", version, about = "Least-energy solutions of -Δu = g(u) on R^N")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimize the energy over the Pohozaev manifold along an eps schedule.
    Solve(Flags),
    /// Closed-form checks.
    Verify {
        #[command(subcommand)]
        check: Check,
    },
    /// Solve over a range of one parameter and emit a CSV table.
    Sweep(Flags),
    /// Optimal constant of the Sobolev-type inequality.
    Constant(Flags),
    /// Radial versus antisymmetric biradial least levels in dimension 4.
    Biradial(Flags),
    /// Vanishing and Brezis-Lieb diagnostics on synthetic sequences.
    Diagnose(Flags),
}

#[derive(Subcommand, Debug)]
enum Check {
    /// Discrete PDE residual and energy of the sampled Gausson.
    Gausson(Flags),
    /// Logarithmic Sobolev gap on normalized Gaussians.
    LogSobolev(Flags),
    /// Pohozaev residual of a computed minimizer.
    Pohozaev(Flags),
}

#[derive(Args, Debug, Clone, Default)]
struct Flags {
    #[arg(long, value_enum)]
    nl: Option<NlName>,
    #[arg(long)]
    dim: Option<usize>,
    /// Value or range `a:b:k`.
    #[arg(long)]
    p: Option<String>,
    /// Value or range `a:b:k`.
    #[arg(long)]
    m: Option<String>,
    /// Value or range `a:b:k`.
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, value_enum)]
    grading: Option<GradingName>,
    /// Comma-separated eps schedule, e.g. `0.5,0.25,0`.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Ball radius for the local-mass diagnostic.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long = "full-profile")]
    full_profile: bool,
    #[arg(long)]
    jobs: Option<usize>,
    /// JSON file of run settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the resolved settings to this path before running.
    #[arg(long = "dump-config")]
    dump_config: Option<PathBuf>,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NlName {
    #[default]
    Log,
    CubicQuintic,
    ZeroMass,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum GradingName {
    Uniform,
    Geometric,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

/// Resolved settings of one run.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub nl: NlName,
    pub dim: usize,
    pub p: Option<String>,
    pub m: Option<String>,
    pub q: Option<String>,
    pub rmax: Option<f64>,
    pub points: Option<usize>,
    pub grading: Option<GradingName>,
    pub eps: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub radius: f64,
    pub format: Option<Format>,
    pub full_profile: bool,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solve = SolveOptions::default();
        RunConfig {
            nl: NlName::Log,
            dim: 3,
            p: None,
            m: None,
            q: None,
            rmax: None,
            points: None,
            grading: None,
            eps: EpsSchedule::default().values().to_vec(),
            tol: solve.tol,
            max_iter: solve.max_iter,
            radius: 2.0,
            format: None,
            full_profile: false,
            jobs: None,
            out: None,
        }
    }
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Validation(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Validation(msg.into()))
}

/// Runs the command line and writes reports to the process streams.
pub fn run(argv: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the command line with explicit output streams.
pub fn run_with(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Validation(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_VALIDATION
        }
        Err(Failure::Run(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Solve(f) => with_config(f, |c, o| solve_cmd(c, o), out),
        Command::Verify { check } => match check {
            Check::Gausson(f) => with_config(f, verify_gausson, out),
            Check::LogSobolev(f) => with_config(f, verify_log_sobolev, out),
            Check::Pohozaev(f) => with_config(f, verify_pohozaev, out),
        },
        Command::Sweep(f) => with_config(f, sweep_cmd, out),
        Command::Constant(f) => with_config(f, constant_cmd, out),
        Command::Biradial(f) => with_config(f, biradial_cmd, out),
        Command::Diagnose(f) => with_config(f, diagnose_cmd, out),
    }
}

fn with_config<F>(flags: Flags, body: F, out: &mut dyn Write) -> Result<(), Failure>
where
    F: FnOnce(&RunConfig, &mut dyn Write) -> Result<(), Failure>,
{
    let config = resolve(&flags)?;
    if let Some(path) = &flags.dump_config {
        let text = serde_json::to_string_pretty(&config).expect("config serializes") + "\n";
        std::fs::write(path, text).map_err(|e| Failure::Run(format!("writing {}: {e}", path.display())))?;
    }
    body(&config, out)
}

fn resolve(flags: &Flags) -> Result<RunConfig, Failure> {
    let mut c = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Validation(format!("reading {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::Validation(format!("invalid config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = flags.nl {
        c.nl = v;
    }
    if let Some(v) = flags.dim {
        c.dim = v;
    }
    if flags.p.is_some() {
        c.p = flags.p.clone();
    }
    if flags.m.is_some() {
        c.m = flags.m.clone();
    }
    if flags.q.is_some() {
        c.q = flags.q.clone();
    }
    if flags.rmax.is_some() {
        c.rmax = flags.rmax;
    }
    if flags.points.is_some() {
        c.points = flags.points;
    }
    if flags.grading.is_some() {
        c.grading = flags.grading;
    }
    if let Some(e) = &flags.eps {
        c.eps = parse_list(e)?;
    }
    if let Some(v) = flags.tol {
        c.tol = v;
    }
    if let Some(v) = flags.max_iter {
        c.max_iter = v;
    }
    if let Some(v) = flags.radius {
        c.radius = v;
    }
    if flags.format.is_some() {
        c.format = flags.format;
    }
    c.full_profile |= flags.full_profile;
    if flags.jobs.is_some() {
        c.jobs = flags.jobs;
    }
    if flags.out.is_some() {
        c.out = flags.out.clone();
    }
    if c.dim < 3 {
        return invalid(format!("dimension must be at least 3, got {}", c.dim));
    }
    if !(c.tol > 0.0) {
        return invalid(format!("tolerance must be positive, got {}", c.tol));
    }
    if c.max_iter == 0 {
        return invalid("max-iter must be positive");
    }
    if c.jobs == Some(0) {
        return invalid("jobs must be positive");
    }
    Ok(c)
}

fn parse_number(s: &str) -> Result<f64, Failure> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Failure::Validation(format!("not a number: '{s}'")))
}

fn parse_list(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',').map(parse_number).collect()
}

/// `a:b:k`, `k` evenly spaced values from `a` to `b` inclusive.
pub fn parse_range(s: &str) -> Option<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return None;
    }
    let a: f64 = parts[0].trim().parse().ok()?;
    let b: f64 = parts[1].trim().parse().ok()?;
    let k: usize = parts[2].trim().parse().ok()?;
    if !(a.is_finite() && b.is_finite()) {
        return None;
    }
    Some(match k {
        0 => vec![],
        1 => vec![a],
        _ => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
    })
}

fn scalar(name: &str, v: &Option<String>) -> Result<Option<f64>, Failure> {
    match v {
        None => Ok(None),
        Some(s) if s.contains(':') => invalid(format!("--{name} takes a single value for this command")),
        Some(s) => parse_number(s).map(Some),
    }
}

fn build_nl(kind: NlName, dim: usize, p: Option<f64>, m: Option<f64>, q: Option<f64>) -> Result<Nonlinearity, Failure> {
    let crit = critical_exponent(dim);
    let nl = match kind {
        NlName::Log => Nonlinearity::logarithmic(),
        NlName::CubicQuintic => {
            let p = p.unwrap_or(if dim == 3 { 4.0 } else { 0.5 * (2.0 + crit) });
            Nonlinearity::cubic_quintic(dim, p, m.unwrap_or(0.1))
        }
        .map_err(|e| Failure::Validation(e.to_string()))?,
        NlName::ZeroMass => Nonlinearity::zero_mass_with(dim, p.unwrap_or(crit - 1.0), q.unwrap_or(crit + 2.0))
            .map_err(|e| Failure::Validation(e.to_string()))?,
    };
    Ok(nl)
}

fn config_nl(c: &RunConfig) -> Result<Nonlinearity, Failure> {
    build_nl(c.nl, c.dim, scalar("p", &c.p)?, scalar("m", &c.m)?, scalar("q", &c.q)?)
}

fn radial_grid(c: &RunConfig, nl: &Nonlinearity, default_points: usize) -> Result<Grid, Failure> {
    let grading = match c.grading {
        Some(GradingName::Uniform) => Grading::Uniform,
        Some(GradingName::Geometric) => Grading::Geometric,
        None if c.nl == NlName::ZeroMass => Grading::Geometric,
        None => Grading::Uniform,
    };
    build_radial_grid(
        c.dim,
        c.rmax.unwrap_or_else(|| default_r_max(nl)),
        c.points.unwrap_or(default_points),
        grading,
    )
    .map_err(|e| Failure::Validation(e.to_string()))
}

fn schedule(c: &RunConfig) -> Result<EpsSchedule, Failure> {
    EpsSchedule::new(c.eps.clone()).map_err(|e| Failure::Validation(e.to_string()))
}

fn solve_options(c: &RunConfig) -> SolveOptions {
    SolveOptions {
        tol: c.tol,
        max_iter: c.max_iter,
        ..SolveOptions::default()
    }
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_all(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                *v = json!(round12(x));
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_all),
        Value::Object(map) => map.values_mut().for_each(round_all),
        _ => {}
    }
}

fn fmt12(x: f64) -> String {
    format!("{}", round12(x))
}

/// Writes `text` to `path`, or to `out` when no path is given.
fn write_output(text: &str, path: &Option<PathBuf>, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Run(format!("writing {}: {e}", p.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Run(format!("writing output: {e}"))),
    }
}

fn emit_json(mut v: Value, c: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    round_all(&mut v);
    let text = serde_json::to_string_pretty(&v).expect("report serializes") + "\n";
    write_output(&text, &c.out, out)
}

fn profile_json(field: &Field, full: bool) -> Value {
    let pts = field.profile();
    let stride = if full { 1 } else { pts.len().div_ceil(PROFILE_POINTS).max(1) };
    let mut picked: Vec<Vec<f64>> = pts.iter().step_by(stride).cloned().collect();
    if !full && stride > 1 {
        if let Some(last) = pts.last() {
            if picked.last() != Some(last) && picked.len() < PROFILE_POINTS {
                picked.push(last.clone());
            }
        }
    }
    json!(picked)
}

fn solve_report(res: &SolveResult, grid: &Grid, levels: &[(f64, f64)], full: bool) -> Value {
    json!({
        "level": res.level,
        "J_eps": res.report.j_eps,
        "dirichlet": res.report.dirichlet,
        "int_G_plus": res.report.int_g_plus,
        "int_G_minus_eps": res.report.int_g_minus_eps,
        "pohozaev_residual": res.report.pohozaev_residual,
        "eps_final": res.eps_final,
        "iterations": res.iterations,
        "converged": res.converged,
        "c_eps": levels.iter().map(|(e, l)| json!({"eps": e, "level": l})).collect::<Vec<_>>(),
        "grid": {"N": grid.dim(), "rmax": grid.r_max(), "points": grid.len()},
        "profile": profile_json(&res.field, full),
    })
}

const CSV_HEADER: &str = "param,level,dirichlet,residual,status";

fn solve_cmd(c: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let nl = config_nl(c)?;
    let grid = radial_grid(c, &nl, 8192)?;
    let sched = schedule(c)?;
    let res = continuation(&grid, &nl, &sched, &solve_options(c))?;
    match c.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(solve_report(&res.result, &grid, &res.levels, c.full_profile), c, out),
        Format::Csv => {
            let r = &res.result;
            let text = format!(
                "{CSV_HEADER}\n,{},{},{},{}\n",
                fmt12(r.level),
                fmt12(r.report.dirichlet),
                fmt12(r.report.pohozaev_residual),
                if r.converged { "converged" } else { "not-converged" }
            );
            write_output(&text, &c.out, out)
        }
    }
}

fn status_of(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain-error",
        Error::EmptyAdmissibleSet(_) => "empty-admissible-set",
        Error::LineSearchFailure(_) => "line-search-failure",
        Error::NoGroundState(_) => "no-ground-state",
        Error::Numerical { .. } => "numerical-error",
    }
}

/// Worker count from `--jobs`, then `GROUNDSTATE_JOBS`, then the machine.
fn job_count(c: &RunConfig) -> Result<usize, Failure> {
    if let Some(j) = c.jobs {
        return Ok(j);
    }
    match std::env::var("GROUNDSTATE_JOBS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|j| *j > 0)
            .ok_or_else(|| Failure::Validation(format!("GROUNDSTATE_JOBS must be a positive integer, got '{v}'"))),
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn sweep_cmd(c: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let ranged: Vec<(&str, &String)> = [("p", &c.p), ("m", &c.m), ("q", &c.q)]
        .into_iter()
        .filter_map(|(n, v)| v.as_ref().filter(|s| s.contains(':')).map(|s| (n, s)))
        .collect();
    if ranged.len() != 1 {
        return invalid("sweep needs exactly one of --p, --m, --q given as a range a:b:k");
    }
    let (name, text) = ranged[0];
    let values = parse_range(text).ok_or_else(|| Failure::Validation(format!("invalid range '{text}'")))?;
    let sched = schedule(c)?;
    let opts = solve_options(c);
    let fixed = |n: &str, v: &Option<String>| if n == name { Ok(None) } else { scalar(n, v) };
    let (p, m, q) = (fixed("p", &c.p)?, fixed("m", &c.m)?, fixed("q", &c.q)?);
    // validate every row before any solve starts
    let mut jobs = Vec::with_capacity(values.len());
    for &v in &values {
        let (pv, mv, qv) = match name {
            "p" => (Some(v), m, q),
            "m" => (p, Some(v), q),
            _ => (p, m, Some(v)),
        };
        let nl = build_nl(c.nl, c.dim, pv, mv, qv)?;
        let grid = radial_grid(c, &nl, 8192)?;
        jobs.push((v, nl, grid));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(job_count(c)?)
        .build()
        .map_err(|e| Failure::Run(format!("thread pool: {e}")))?;
    let rows: Vec<String> = pool.install(|| {
        jobs.par_iter()
            .map(|(v, nl, grid)| match continuation(grid, nl, &sched, &opts) {
                Ok(r) => format!(
                    "{},{},{},{},{}",
                    fmt12(*v),
                    fmt12(r.result.level),
                    fmt12(r.result.report.dirichlet),
                    fmt12(r.result.report.pohozaev_residual),
                    if r.result.converged { "converged" } else { "not-converged" }
                ),
                Err(e) => format!("{},,,,{}", fmt12(*v), status_of(&e)),
            })
            .collect()
    });
    match c.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut text = String::from(CSV_HEADER);
            text.push('\n');
            for r in rows {
                text.push_str(&r);
                text.push('\n');
            }
            write_output(&text, &c.out, out)
        }
        Format::Json => {
            let parsed: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let f: Vec<&str> = r.split(',').collect();
                    let num = |s: &str| s.parse::<f64>().map(Value::from).unwrap_or(Value::Null);
                    json!({"param": num(f[0]), "level": num(f[1]), "dirichlet": num(f[2]),
                           "residual": num(f[3]), "status": f[4]})
                })
                .collect();
            emit_json(json!({ "parameter": name, "rows": parsed }), c, out)
        }
    }
}

fn gausson_level(dim: usize) -> f64 {
    let n = dim as f64;
    ((n - 1.0).exp()) * std::f64::consts::PI.powf(n / 2.0) / 2.0
}

fn gausson_profile(dim: usize) -> impl Fn(f64) -> f64 {
    let c = (dim as f64 - 1.0) / 2.0;
    move |r| (c - r * r / 2.0).exp()
}

fn verify_gausson(c: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let nl = Nonlinearity::logarithmic();
    let grid = radial_grid(c, &nl, 8192)?;
    let u = sample(&grid, gausson_profile(c.dim))?;
    let rep = energy(&u, &nl, 0.0)?;
    let expected = gausson_level(c.dim);
    emit_json(
        json!({
            "N": c.dim,
            "points": grid.len(),
            "rmax": grid.r_max(),
            "pde_residual": pde_residual(&u, &nl),
            "level": rep.j_eps,
            "expected_level": expected,
            "relative_error": rep.j_eps / expected - 1.0,
            "dirichlet": rep.dirichlet,
            "pohozaev_residual": rep.pohozaev_residual,
        }),
        c,
        out,
    )
}

fn verify_log_sobolev(c: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let nl = Nonlinearity::logarithmic();
    let grid = radial_grid(c, &nl, 8192)?;
    let mut gaps = Vec::new();
    let mut alpha = None;
    for lam in [0.5f64, 1.0, 2.0] {
        let u = sample(&grid, move |r| (-lam * lam * r * r / 2.0).exp())?;
        let mass = crate::grid::integrate(&u, |s| s * s);
        let u = u.scale(mass.sqrt().recip());
        gaps.push(json!({"lambda": lam, "gap": log_sobolev_gap(&u)?}));
        if lam == 1.0 {
            alpha = Some(optimal_alpha(&u)?);
        }
    }
    emit_json(json!({"N": c.dim, "gaussian_gaps": gaps, "optimal_alpha": alpha}), c, out)
}

fn verify_pohozaev(c: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let nl = config_nl(c)?;
    let grid = radial_grid(c, &nl, 4096)?;
    let res = continuation(&grid, &nl, &schedule(c)?, &solve_options(c))?.result;
    let rep = res.report;
    emit_json(
        json!({
            "level": res.level,
            "dirichlet": rep.dirichlet,
            "pohozaev_residual": rep.pohozaev_residual,
            "relative_residual": rep.pohozaev_residual / rep.dirichlet,
            "on_manifold": rep.on_manifold(),
            "converged": res.converged,
        }),
        c,
        out,
    )
}

fn constant_cmd(c: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let nl = config_nl(c)?;
    let (level, source) = match c.nl {
        NlName::Log => (gausson_level(c.dim), "closed-form"),
        _ => {
            let grid = radial_grid(c, &nl, 8192)?;
            let res = continuation(&grid, &nl, &schedule(c)?, &solve_options(c))?;
            (res.result.level, "solved")
        }
    };
    emit_json(
        json!({
            "N": c.dim,
            "level": level,
            "level_source": source,
            "constant": sharp_constant(c.dim, level)?,
        }),
        c,
        out,
    )
}

fn biradial_cmd(c: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    if c.dim != 4 {
        return invalid(format!("the biradial experiment runs in dimension 4, got {}", c.dim));
    }
    let nl = config_nl(c)?;
    let sched = schedule(c)?;
    let eps = *sched.values().last().expect("schedule is nonempty");
    let opts = GapOptions {
        r_max: c.rmax.unwrap_or_else(|| default_r_max(&nl)),
        biradial_points: c.points.unwrap_or(256),
        eps,
        solve: solve_options(c),
        ..GapOptions::default()
    };
    if opts.biradial_points < 16 {
        return invalid("need at least 16 points per axis");
    }
    let rep = verify_nonradial_gap(&nl, &opts)?;
    emit_json(serde_json::to_value(rep).expect("report serializes"), c, out)
}

fn diagnose_cmd(c: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let nl = Nonlinearity::logarithmic();
    let grid = radial_grid(c, &nl, 8192)?;
    if !(c.radius > 0.0 && c.radius <= grid.r_max() / 2.0) {
        return invalid(format!("radius must lie in (0, {}]", grid.r_max() / 2.0));
    }
    let base = sample(&grid, gausson_profile(c.dim))?;
    let dim = c.dim as f64;
    let scales = [1.0f64, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
    let mut local = Vec::new();
    for &n in &scales {
        // mass-preserving spread n^{−N/2}u(·/n)
        let u = dilate(&base, 1.0 / n)?.scale(n.powf(-dim / 2.0));
        local.push(json!({"n": n, "local_mass_sup": local_mass_sup(&u, c.radius)?}));
    }
    let bump = |r: f64| {
        let t = 1.0 - r * r;
        if t > 0.0 {
            t * t
        } else {
            0.0
        }
    };
    let limit = base.scale(crate::grid::integrate(&base, |s| s * s).sqrt().recip());
    let seq: Vec<Field> = scales
        .iter()
        .map(|&n| sample(&grid, move |r| bump(n * r)).and_then(|b| limit.add(&b)))
        .collect::<Result<_, _>>()?;
    let crit = critical_exponent(c.dim);
    let defects = brezis_lieb_defect(&FieldSequence::new(seq)?, |s| s.abs().powf(crit), &limit)?;
    let bl: Vec<Value> = scales
        .iter()
        .zip(&defects)
        .map(|(n, d)| json!({"n": n, "defect": d}))
        .collect();
    emit_json(json!({"N": c.dim, "radius": c.radius, "vanishing": local, "brezis_lieb": bl}), c, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let argv: Vec<String> = std::iter::once("groundstate").chain(args.iter().copied()).map(String::from).collect();
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_with(&argv, &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_range("0.5:1:1").unwrap(), vec![0.5]);
        assert!(parse_range("0:1:0").unwrap().is_empty());
        assert!(parse_range("0:1").is_none());
        assert_eq!(parse_range("0.01:0.1875:20").unwrap().len(), 20);
    }

    #[test]
    fn rounding() {
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
        assert_eq!(round12(22845.123456789012), 22845.1234568);
        assert_eq!(round12(0.0), 0.0);
    }

    #[test]
    fn usage_errors_exit_two() {
        let (code, _, err) = run_args(&["frobnicate"]);
        assert_eq!(code, 2);
        assert!(!err.is_empty());
        assert_eq!(run_args(&["solve", "--bogus"]).0, 2);
        assert_eq!(run_args(&["solve", "--dim", "2"]).0, 2);
        assert_eq!(run_args(&["solve", "--eps", "0.7,0"]).0, 2);
        assert_eq!(run_args(&["solve", "--nl", "cubic-quintic", "--p", "7"]).0, 2);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("solve"));
    }

    #[test]
    fn constant_log_three() {
        let (code, out, _) = run_args(&["constant", "--nl", "log", "--dim", "3"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        let c = v["constant"].as_f64().unwrap();
        assert!((c / 2.285e4 - 1.0).abs() < 1e-3, "{c}");
    }

    #[test]
    fn empty_sweep_has_header_only() {
        let (code, out, _) = run_args(&["sweep", "--nl", "cubic-quintic", "--m", "0.01:0.1:0"]);
        assert_eq!(code, 0);
        assert_eq!(out, format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn sweep_needs_a_range() {
        assert_eq!(run_args(&["sweep", "--nl", "cubic-quintic", "--m", "0.1"]).0, 2);
    }
}
