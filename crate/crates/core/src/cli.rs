//! Command-line front end. Every stochastic command takes a mandatory seed
//! and echoes it, with all parameters, in the artifact it writes.

use crate::bounds::{write_curves_csv, BoundCurve, BoundKind};
use crate::coupling::{
    outcomes_csv, run_comparison_z, run_replicates, simulate_coupling_traced, trace_csv, CouplingParams, Detection,
    DriftModel,
};
use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::linalg::dist;
use crate::oracle1d::{exit_time_survival_mc, tightness_csv, Heat1D};
use crate::rng::{auxiliary_stream, replicate_stream};
use crate::stats::{
    hitprob_experiment, survival_curve, verify_bound, verify_dominance, SurvivalCurve, TimeSample, SCHEMA_VERSION,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::PathBuf;

pub const THREADS_ENV: &str = "CONVEX_MIXING_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "convex-mixing", version, about = "Mixing bounds and mirror-coupling checks for reflected Brownian motion in convex sets")]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate bound curves on a time grid.
    Bounds(BoundsArgs),
    /// Run mirror-coupling replicates and write coupling times.
    Simulate(SimulateArgs),
    /// Check the pairwise bound against simulated coupling times.
    Verify(VerifyArgs),
    /// One-dimensional exact references.
    Oracle1d(Oracle1dArgs),
    /// Compare the drifted coupling with its one-dimensional comparison process.
    Drift(DriftArgs),
    /// Hitting-probability experiment.
    Hitprob(HitprobArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetectionArg {
    Bridge,
    Endpoint,
}

impl From<DetectionArg> for Detection {
    fn from(d: DetectionArg) -> Self {
        match d {
            DetectionArg::Bridge => Detection::Bridge,
            DetectionArg::Endpoint => Detection::Endpoint,
        }
    }
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub d: f64,
    /// `start:stop:count:linear|log` or a comma list.
    #[arg(long)]
    pub t: String,
    /// Comma list of F_pair, F_stationary_avg, F_stationary_worst, chernoff, matthews, bebendorf_rate.
    #[arg(long, default_value = "F_stationary_worst,matthews,chernoff")]
    pub kinds: String,
    /// `|x-y|` for F_pair; defaults to d.
    #[arg(long)]
    pub dist: Option<f64>,
    /// Offset k for chernoff.
    #[arg(long, default_value_t = 0.0)]
    pub k: f64,
    /// Constant c for bebendorf_rate.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Domain for F_stationary_avg (path or inline JSON).
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CouplingArgs {
    /// Domain JSON (path or inline).
    #[arg(long)]
    pub domain: String,
    /// `antipodal`, `center` or comma-separated coordinates.
    #[arg(long, default_value = "antipodal")]
    pub x: String,
    /// As `--x`; defaults to the antipodal partner when `--x antipodal`.
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub replicates: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub h: f64,
    /// Coupling threshold; defaults to 0.5·√h.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum, default_value_t = DetectionArg::Bridge)]
    pub detection: DetectionArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub coupling: CouplingArgs,
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
    /// OU drift strength θ; no drift when absent.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Write the step trace of this replicate to `--trace-out`.
    #[arg(long)]
    pub trace_replicate: Option<u64>,
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub coupling: CouplingArgs,
    #[arg(long, default_value = "0.01:1:100:linear")]
    pub t: String,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Skip the ε/2 sensitivity re-run.
    #[arg(long)]
    pub no_sensitivity: bool,
    #[arg(long, default_value = "verify")]
    pub id: String,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct Oracle1dArgs {
    #[arg(long)]
    pub d: f64,
    /// Tightness sweep at t ∈ {0.05, 0.1, 0.25, 0.5, 1}·d² (or `--times`).
    #[arg(long)]
    pub tightness: bool,
    #[arg(long)]
    pub times: Option<String>,
    /// Start point for the sweep.
    #[arg(long, default_value_t = 0.0)]
    pub x: f64,
    /// Exit-time Monte Carlo from offset `--k` on the grid `--t`.
    #[arg(long)]
    pub exit_mc: bool,
    #[arg(long, default_value_t = 0.0)]
    pub k: f64,
    #[arg(long)]
    pub t: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub h: f64,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct DriftArgs {
    #[command(flatten)]
    pub coupling: CouplingArgs,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long, default_value = "0.02:2:100:linear")]
    pub t: String,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct HitprobArgs {
    #[arg(long)]
    pub domain: String,
    /// Target set A as domain JSON.
    #[arg(long)]
    pub a: String,
    /// Target set B as domain JSON.
    #[arg(long)]
    pub b: String,
    #[arg(long, default_value = "center")]
    pub x: String,
    #[arg(long)]
    pub t_free: f64,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub h: f64,
    /// Hard cap on path length; unfinished paths are reported as censored.
    #[arg(long, default_value_t = 100.0)]
    pub t_cap: f64,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

fn config(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Parses `start:stop:count:linear|log` or a comma list into an ascending grid.
pub fn parse_grid(spec: &str, field: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = if parts.len() == 4 {
        let num = |s: &str, what: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| config(field, format!("{what} `{s}` is not a number")))
        };
        let start = num(parts[0], "start")?;
        let stop = num(parts[1], "stop")?;
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| config(field, format!("count `{}` is not an integer", parts[2])))?;
        if count < 1 {
            return Err(config(field, "count must be at least 1"));
        }
        let log = match parts[3].trim() {
            "linear" => false,
            "log" => true,
            other => return Err(config(field, format!("spacing `{other}` must be linear or log"))),
        };
        if log && !(start > 0.0) {
            return Err(config(field, "log spacing needs start > 0"));
        }
        if count == 1 {
            vec![start]
        } else {
            (0..count)
                .map(|i| {
                    if i == 0 {
                        return start;
                    }
                    if i == count - 1 {
                        return stop;
                    }
                    let s = i as f64 / (count - 1) as f64;
                    if log {
                        (start.ln() + s * (stop.ln() - start.ln())).exp()
                    } else {
                        start + s * (stop - start)
                    }
                })
                .collect()
        }
    } else {
        spec.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| config(field, format!("`{s}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?
    };
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(config(field, "times must be finite and nonnegative"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config(field, "times must be strictly ascending"));
    }
    Ok(grid)
}

/// Reads a domain from a file path or inline JSON.
pub fn load_domain(arg: &str) -> Result<(ConvexBody, Value)> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| config("domain", format!("cannot read `{arg}`: {e}")))?
    };
    let body = ConvexBody::from_json(&text)?;
    let echo = serde_json::to_value(body.to_spec())?;
    Ok((body, echo))
}

/// Resolves `antipodal`, `center` or coordinates against the body.
pub fn resolve_point(body: &ConvexBody, spec: &str, field: &str, antipodal_index: usize) -> Result<Vec<f64>> {
    let p = match spec.trim() {
        "center" => body.center(),
        "antipodal" => {
            let (a, b) = body.antipodal_pair()?;
            if antipodal_index == 0 {
                a
            } else {
                b
            }
        }
        coords => coords
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| config(field, format!("`{s}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    if p.len() != body.dimension() {
        return Err(config(field, format!("expected {} coordinates, got {}", body.dimension(), p.len())));
    }
    if !body.contains(&p)? {
        return Err(config(field, "point lies outside the domain"));
    }
    Ok(p)
}

fn resolve_pair(body: &ConvexBody, c: &CouplingArgs) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = resolve_point(body, &c.x, "x", 0)?;
    let y = match (&c.y, c.x.trim()) {
        (Some(y), _) => resolve_point(body, y, "y", 1)?,
        (None, "antipodal") => resolve_point(body, "antipodal", "y", 1)?,
        (None, _) => return Err(config("y", "required unless --x antipodal")),
    };
    Ok((x, y))
}

fn coupling_params(c: &CouplingArgs, t_max: f64) -> Result<CouplingParams> {
    let mut p = CouplingParams::new(c.h, t_max).with_detection(c.detection.into());
    if let Some(e) = c.epsilon {
        p = p.with_epsilon(e);
    }
    if c.replicates < 1 {
        return Err(config("replicates", "must be positive"));
    }
    Ok(p)
}

fn coupling_echo(c: &CouplingArgs, domain: &Value, x: &[f64], y: &[f64], p: &CouplingParams) -> Value {
    json!({
        "domain": domain,
        "x": x,
        "y": y,
        "replicates": c.replicates,
        "h": p.h,
        "epsilon": p.epsilon,
        "t_max": p.t_max,
        "detection": p.detection,
    })
}

/// `# key=value` lines placed above a CSV header.
fn csv_preamble(command: &str, seed: Option<u64>, params: &Value) -> String {
    let mut out = format!("# schema_version={SCHEMA_VERSION}\n# command={command}\n");
    if let Some(s) = seed {
        let _ = writeln!(out, "# seed={s}");
    }
    let _ = writeln!(out, "# params={params}");
    out
}

fn emit(output: &Output, text: &str) -> Result<()> {
    match &output.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn samples_of(outcomes: &[crate::coupling::CouplingOutcome]) -> Vec<TimeSample> {
    outcomes.iter().map(|o| o.tau.sample()).collect()
}

fn curve_json(c: &SurvivalCurve) -> Value {
    json!({
        "t_grid": c.t_grid,
        "survival": c.survival,
        "band_halfwidth": c.band_halfwidth,
        "n_samples": c.n_samples,
        "n_censored": c.n_censored,
        "alpha": c.alpha,
    })
}

fn cmd_bounds(a: &BoundsArgs) -> Result<i32> {
    let t_grid = parse_grid(&a.t, "t")?;
    let kinds = a
        .kinds
        .split(',')
        .map(|k| k.trim().parse::<BoundKind>().map_err(|e| config("kinds", e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut curves = Vec::new();
    let mut stochastic = false;
    for kind in kinds {
        let curve = match kind {
            BoundKind::FPair => BoundCurve::f_pair(a.d, a.dist.unwrap_or(a.d), &t_grid, a.tol)?,
            BoundKind::FStationaryWorst => BoundCurve::f_stationary_worst(a.d, &t_grid, a.tol)?,
            BoundKind::Chernoff => BoundCurve::chernoff(a.d, a.k, &t_grid)?,
            BoundKind::Matthews => BoundCurve::matthews(a.d, &t_grid)?,
            BoundKind::BebendorfRate => BoundCurve::bebendorf(a.d, a.c, &t_grid)?,
            BoundKind::FStationaryAvg => {
                stochastic = true;
                let domain = a
                    .domain
                    .as_deref()
                    .ok_or_else(|| config("domain", "required for F_stationary_avg"))?;
                let seed = a.seed.ok_or_else(|| config("seed", "required for F_stationary_avg"))?;
                let (body, _) = load_domain(domain)?;
                if (body.diameter() - a.d).abs() > 1e-12 * a.d {
                    return Err(config("d", format!("differs from the domain diameter {}", body.diameter())));
                }
                let x = resolve_point(&body, a.x.as_deref().unwrap_or("center"), "x", 0)?;
                let mut rng = auxiliary_stream(seed, 1);
                BoundCurve::f_stationary_avg(&body, &x, &t_grid, a.samples, &mut rng, a.tol)?
            }
        };
        curves.push(curve);
    }
    let params = json!({
        "d": a.d, "t_grid": t_grid, "kinds": a.kinds, "dist": a.dist.unwrap_or(a.d), "k": a.k, "c": a.c,
        "domain": a.domain, "x": a.x, "samples": a.samples, "tol": a.tol,
    });
    let seed = if stochastic { a.seed } else { None };
    let text = match a.format {
        Format::Csv => csv_preamble("bounds", seed, &params) + &write_curves_csv(&curves),
        Format::Json => {
            let list: Vec<Value> = curves
                .iter()
                .map(|c| {
                    json!({
                        "bound_kind": c.kind.as_str(), "d": c.d, "param": c.param, "t_grid": c.t_grid,
                        "values": c.values, "terms_used": c.terms_used, "trunc_err": c.trunc_err,
                    })
                })
                .collect();
            serde_json::to_string_pretty(&json!({
                "schema_version": SCHEMA_VERSION, "seed": seed, "params": params, "curves": list,
            }))? + "\n"
        }
    };
    emit(&a.output, &text)?;
    Ok(EXIT_OK)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let c = &a.coupling;
    let (body, domain) = load_domain(&c.domain)?;
    let (x, y) = resolve_pair(&body, c)?;
    let params = coupling_params(c, a.t_max)?;
    let drift = a.theta.map(|th| DriftModel::ou(th, &body)).transpose()?;
    let outcomes = run_replicates(&body, &x, &y, drift.as_ref(), &params, c.replicates, c.seed)?;
    let mut echo = coupling_echo(c, &domain, &x, &y, &params);
    echo["theta"] = json!(a.theta);
    if let Some(i) = a.trace_replicate {
        let path = a
            .trace_out
            .as_ref()
            .ok_or_else(|| config("trace_out", "required with --trace-replicate"))?;
        let mut rng = replicate_stream(c.seed, i);
        let (_, rows) = simulate_coupling_traced(&body, &x, &y, drift.as_ref(), &params, &mut rng)?;
        std::fs::write(path, csv_preamble("simulate-trace", Some(c.seed), &echo) + &trace_csv(&rows))?;
    }
    let text = match a.format {
        Format::Csv => csv_preamble("simulate", Some(c.seed), &echo) + &outcomes_csv(&outcomes),
        Format::Json => {
            serde_json::to_string_pretty(&json!({
                "schema_version": SCHEMA_VERSION, "seed": c.seed, "params": echo, "outcomes": outcomes,
            }))? + "\n"
        }
    };
    emit(&a.output, &text)?;
    Ok(EXIT_OK)
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let c = &a.coupling;
    let (body, domain) = load_domain(&c.domain)?;
    let (x, y) = resolve_pair(&body, c)?;
    let t_grid = parse_grid(&a.t, "t")?;
    let t_max = *t_grid.last().ok_or_else(|| config("t", "empty grid"))?;
    if !(t_max > 0.0) {
        return Err(config("t", "grid must reach a positive time"));
    }
    let params = coupling_params(c, t_max)?;
    let d = body.diameter();
    let bound = BoundCurve::f_pair(d, dist(&x, &y).min(d), &t_grid, a.tol)?;
    let run = |p: &CouplingParams| -> Result<SurvivalCurve> {
        let outcomes = run_replicates(&body, &x, &y, None, p, c.replicates, c.seed)?;
        survival_curve(&samples_of(&outcomes), &t_grid, a.alpha)
    };
    let curve = run(&params)?;
    let mut report = verify_bound(&a.id, &curve, &bound)?.with_seed(c.seed);
    if !a.no_sensitivity {
        let half = params.with_epsilon(params.epsilon / 2.0);
        let sens = verify_bound(&a.id, &run(&half)?, &bound)?;
        report = report.with_sensitivity(sens.verdict);
    }
    let echo = coupling_echo(c, &domain, &x, &y, &params);
    if let Value::Object(map) = echo {
        for (k, v) in map {
            report = report.with_param(&k, v);
        }
    }
    emit(&a.output, &(report.to_json() + "\n"))?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_VERIFY_FAIL })
}

fn cmd_oracle1d(a: &Oracle1dArgs) -> Result<i32> {
    if a.tightness == a.exit_mc {
        return Err(config("tightness", "choose exactly one of --tightness or --exit-mc"));
    }
    let heat = Heat1D::new(a.d)?;
    let text = if a.tightness {
        let times = match &a.times {
            Some(s) => parse_grid(s, "times")?,
            None => [0.05, 0.1, 0.25, 0.5, 1.0].iter().map(|s| s * a.d * a.d).collect(),
        };
        let params = json!({ "d": a.d, "x": a.x, "times": times });
        csv_preamble("oracle1d-tightness", None, &params) + &tightness_csv(&heat.tightness_sweep(&times, a.x)?)
    } else {
        let seed = a.seed.ok_or_else(|| config("seed", "required for --exit-mc"))?;
        let t_grid = parse_grid(a.t.as_deref().ok_or_else(|| config("t", "required for --exit-mc"))?, "t")?;
        let curve = exit_time_survival_mc(a.d, a.k, &t_grid, a.paths, a.h, a.alpha, seed)?;
        let params = json!({ "d": a.d, "k": a.k, "paths": a.paths, "h": a.h, "alpha": a.alpha });
        let mut out = csv_preamble("oracle1d-exit-mc", Some(seed), &params);
        out.push_str("t,survival,band,series\n");
        for (&t, &s) in curve.t_grid.iter().zip(&curve.survival) {
            let f = crate::bounds::survival_f(a.d, t, a.k, 1e-12)?.value;
            let _ = writeln!(out, "{t},{s},{},{f}", curve.band_halfwidth);
        }
        out
    };
    emit(&a.output, &text)?;
    Ok(EXIT_OK)
}

fn cmd_drift(a: &DriftArgs) -> Result<i32> {
    let c = &a.coupling;
    let (body, domain) = load_domain(&c.domain)?;
    let (x, y) = resolve_pair(&body, c)?;
    let t_grid = parse_grid(&a.t, "t")?;
    let t_max = *t_grid.last().ok_or_else(|| config("t", "empty grid"))?;
    let params = coupling_params(c, t_max)?;
    let ou = DriftModel::ou(a.theta, &body)?;
    let outcomes = run_replicates(&body, &x, &y, Some(&ou), &params, c.replicates, c.seed)?;
    let coupled = survival_curve(&samples_of(&outcomes), &t_grid, a.alpha)?;
    let r0 = dist(&x, &y);
    // Z replicates use streams disjoint from the coupling replicates.
    let z_seed = c.seed ^ 0x5A5A_5A5A_5A5A_5A5A;
    let z = run_comparison_z(&ou, r0, params.h, t_max, c.replicates, z_seed)?;
    let z_curve = survival_curve(&z.iter().map(|o| o.sample()).collect::<Vec<_>>(), &t_grid, a.alpha)?;
    let mut report = verify_dominance("drift_comparison", &coupled, &z_curve)?
        .with_seed(c.seed)
        .with_param("theta", a.theta)
        .with_param("z_seed", z_seed)
        .with_param("coupling_curve", curve_json(&coupled))
        .with_param("z_curve", curve_json(&z_curve));
    if let Value::Object(map) = coupling_echo(c, &domain, &x, &y, &params) {
        for (k, v) in map {
            report = report.with_param(&k, v);
        }
    }
    emit(&a.output, &(report.to_json() + "\n"))?;
    Ok(EXIT_OK)
}

fn cmd_hitprob(a: &HitprobArgs) -> Result<i32> {
    let (body, _) = load_domain(&a.domain)?;
    let (set_a, _) = load_domain(&a.a).map_err(|e| config("a", e.to_string()))?;
    let (set_b, _) = load_domain(&a.b).map_err(|e| config("b", e.to_string()))?;
    let x = resolve_point(&body, &a.x, "x", 0)?;
    let rep = hitprob_experiment(&body, &set_a, &set_b, &x, a.t_free, a.paths, a.h, a.t_cap, a.seed)?;
    emit(&a.output, &(rep.to_json() + "\n"))?;
    Ok(EXIT_OK)
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Bounds(a) => cmd_bounds(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Oracle1d(a) => cmd_oracle1d(a),
        Command::Drift(a) => cmd_drift(a),
        Command::Hitprob(a) => cmd_hitprob(a),
    }
}

/// Runs the parsed command inside a pool of `--threads` workers and maps
/// the result to an exit status.
pub fn run(cli: Cli) -> i32 {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: config error in `threads`: must be positive");
            return EXIT_CONFIG;
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_RUNTIME;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::DomainSpec { .. } | Error::InvalidArgument { .. } => EXIT_CONFIG,
                _ => EXIT_RUNTIME,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_specs() {
        assert_eq!(parse_grid("0:1:3:linear", "t").unwrap(), vec![0.0, 0.5, 1.0]);
        let g = parse_grid("0.1:4:40:log", "t").unwrap();
        assert_eq!(g.len(), 40);
        assert_eq!((g[0], g[39]), (0.1, 4.0));
        assert!((g[1] / g[0] - g[39] / g[38]).abs() < 1e-12);
        assert_eq!(parse_grid("0.25, 0.5,1", "t").unwrap(), vec![0.25, 0.5, 1.0]);
    }

    #[test]
    fn grid_errors_name_the_field() {
        for bad in ["0:1:3:cubic", "0:1:x:log", "0:1:3:log", "1,0.5", "a,b"] {
            match parse_grid(bad, "t") {
                Err(Error::Config { field, .. }) => assert_eq!(field, "t"),
                other => panic!("{bad}: {other:?}"),
            }
        }
    }

    #[test]
    fn point_shorthands() {
        let b = ConvexBody::new_box(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(resolve_point(&b, "center", "x", 0).unwrap(), vec![0.5, 1.0]);
        assert_eq!(resolve_point(&b, "antipodal", "x", 0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(resolve_point(&b, "antipodal", "y", 1).unwrap(), vec![1.0, 2.0]);
        assert_eq!(resolve_point(&b, "0.2, 1.5", "x", 0).unwrap(), vec![0.2, 1.5]);
        assert!(matches!(resolve_point(&b, "0.2", "x", 0), Err(Error::Config { .. })));
        assert!(matches!(resolve_point(&b, "3,0", "x", 0), Err(Error::Config { .. })));
    }

    #[test]
    fn seed_is_mandatory_for_verify() {
        let parsed = Cli::try_parse_from(["convex-mixing", "verify", "--domain", "{}"]);
        assert!(parsed.is_err());
    }

    #[test]
    fn preamble_lines() {
        let p = csv_preamble("simulate", Some(7), &json!({"h": 0.001}));
        assert_eq!(p, "# schema_version=1\n# command=simulate\n# seed=7\n# params={\"h\":0.001}\n");
    }
}
