//! Command-line front end: `solve`, `plan`, `validate-sampler` and `brute`.
//!
//! Every command produces a JSON report with top-level keys `config`, `seed`,
//! `results`, `provenance` and `warnings`. Wall-clock timings live under
//! `provenance.timing` and are the only non-reproducible part of a report.

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

use crate::brownian::{BrownianError, IncrementMode};
use crate::geometry::{random_point, GeometryError, ManifoldShape};
use crate::langevin::{rgd_baseline, run_chain, LangevinConfig, LangevinError};
use crate::maxcut::{
    bm_cut_report, brute_force_maxcut, parse_graph, GraphInstance, MaxCutError, BRUTE_FORCE_MAX_N,
};
use crate::objective::{lipschitz_estimates, BurerMonteiro};
use crate::rng::{
    stream, BASELINE_STREAM, CHAIN_STREAM, INIT_STREAM, ROUNDING_STREAM, VALIDATION_STREAM,
};
use crate::theory::{
    self, TheoryError, TheoryInputs, DEFAULT_ETA_SCALE, DEFAULT_PRACTICAL_ITERATIONS,
};
use crate::validation::{
    chi_square_ainfty, cosine_moment_check, density_checks, qm_normalization_check,
    radial_square_check, sample_radial, tan_squared_check, wf_mean_check, Check, ChiSquareCheck,
};
use crate::wright_fisher::{SeriesTolerances, WrightFisherError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// `(theta, t)` pairs for the chi-square test of the ancestral sampler.
pub const CHI_SQUARE_PAIRS: [(f64, f64); 3] = [(3.0, 0.5), (5.0, 1.0), (1.5, 2.0)];
pub const CHI_SQUARE_SIGNIFICANCE: f64 = 0.01;
pub const QM_NORMALIZATION_TOL: f64 = 1e-4;
pub const DENSITY_NORMALIZATION_TOL: f64 = 1e-3;
const BASELINE_MAX_ITERS: u64 = 10_000;
const BASELINE_GRAD_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<TheoryError> for CliError {
    fn from(e: TheoryError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<LangevinError> for CliError {
    fn from(e: LangevinError) -> Self {
        match e {
            LangevinError::InvalidConfig(m) => CliError::Usage(m),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<BrownianError> for CliError {
    fn from(e: BrownianError) -> Self {
        match e {
            BrownianError::DimensionTooSmall(_) | BrownianError::InvalidTime(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<WrightFisherError> for CliError {
    fn from(e: WrightFisherError) -> Self {
        match e {
            WrightFisherError::InvalidParameter { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<MaxCutError> for CliError {
    fn from(e: MaxCutError) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sphere-langevin",
    version,
    about = "Riemannian Langevin optimization on products of spheres"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run Langevin chains on the Burer-Monteiro relaxation of Max-Cut and round.
    Solve(SolveArgs),
    /// Evaluate the theoretical parameter prescriptions.
    Plan(PlanArgs),
    /// Run the statistical battery for the exact Brownian and Wright-Fisher samplers.
    ValidateSampler(ValidateArgs),
    /// Exhaustive Max-Cut for small graphs.
    Brute(BruteArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Exact,
    Tangent,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    /// Edge-list graph file: header `n m`, then `i j w` per edge (1-indexed).
    #[arg(long)]
    pub graph: PathBuf,
    /// Sphere dimension of every factor.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Step size; planner preset when omitted.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Inverse temperature; planner preset when omitted.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub iters: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub gw_samples: usize,
    #[arg(long, default_value_t = 100)]
    pub record_every: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    /// Horizon below which `tangent` mode uses the Gaussian approximation.
    #[arg(long, default_value_t = 0.05)]
    pub small_t: f64,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Accuracy used by the planner preset for beta.
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    /// Confidence used by the planner preset for beta.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Also run deterministic Riemannian gradient descent.
    #[arg(long)]
    pub baseline: bool,
    /// Write recorded trajectories as CSV.
    #[arg(long)]
    pub trajectory_csv: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlanArgs {
    /// Number of factors; taken from `--graph` when given.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, default_value_t = 3)]
    pub d: u64,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub delta: f64,
    /// Derive n and the Lipschitz constants from this graph.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub k2: Option<f64>,
    #[arg(long)]
    pub k3: Option<f64>,
    #[arg(long)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub lambda_tilde: Option<f64>,
    /// Bound on the initial KL divergence.
    #[arg(long)]
    pub h0: Option<f64>,
    /// Use this log-Sobolev constant instead of the prescribed one.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Gradient-norm constant enabling the feasibility checklist.
    #[arg(long)]
    pub c_f: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ETA_SCALE)]
    pub eta_scale: f64,
    #[arg(long, default_value_t = DEFAULT_PRACTICAL_ITERATIONS)]
    pub practical_iters: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    /// Sphere dimensions, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [3usize])]
    pub d: Vec<usize>,
    /// Horizons, comma separated.
    #[arg(long = "t", value_delimiter = ',', default_values_t = [0.1, 0.5, 1.0])]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BruteArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// A finished report and whether every validation test in it passed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    pub passed: bool,
}

fn report(
    config: impl Serialize,
    seed: Option<u64>,
    results: Value,
    provenance: Value,
    warnings: Vec<String>,
) -> Value {
    json!({
        "config": serde_json::to_value(config).expect("config serializes"),
        "seed": seed,
        "results": results,
        "provenance": provenance,
        "warnings": warnings,
    })
}

/// Removes `provenance.timing`, the only field outside the determinism
/// contract.
pub fn strip_timing(report: &mut Value) {
    if let Some(p) = report.get_mut("provenance").and_then(Value::as_object_mut) {
        p.remove("timing");
    }
}

pub fn render(report: &Value) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn load_graph(path: &Path) -> Result<GraphInstance, CliError> {
    let file = File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_graph(BufReader::new(file)).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn check_positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!(
            "--{name} must be positive and finite, got {v}"
        )))
    }
}

impl SolveArgs {
    fn validate(&self) -> Result<(), CliError> {
        if self.d < 2 {
            return Err(usage(format!("--d must be >= 2, got {}", self.d)));
        }
        if let Some(eta) = self.eta {
            check_positive("eta", eta)?;
        }
        if let Some(beta) = self.beta {
            check_positive("beta", beta)?;
        }
        if self.iters == Some(0) {
            return Err(usage("--iters must be >= 1"));
        }
        if self.gw_samples == 0 {
            return Err(usage("--gw-samples must be >= 1"));
        }
        if self.record_every == 0 {
            return Err(usage("--record-every must be >= 1"));
        }
        if self.chains == 0 {
            return Err(usage("--chains must be >= 1"));
        }
        check_positive("small-t", self.small_t)
    }

    fn mode(&self) -> IncrementMode {
        match self.mode {
            ModeArg::Exact => IncrementMode::exact(),
            ModeArg::Tangent => IncrementMode::tangent_approx(self.small_t),
        }
    }
}

#[derive(Debug, Serialize)]
struct ChainResult {
    chain: usize,
    run: crate::langevin::RunReport,
    cut: crate::maxcut::CutReport,
}

pub fn cmd_solve(args: &SolveArgs) -> Result<Outcome, CliError> {
    args.validate()?;
    let start = Instant::now();
    let g = load_graph(&args.graph)?;
    let shape = ManifoldShape::new(g.n(), args.d)?;
    let objective = BurerMonteiro::new(g.cost_matrix().clone());
    let lipschitz = lipschitz_estimates(g.cost_matrix(), shape);
    let mut warnings = Vec::new();

    let needs_preset = args.eta.is_none() || args.beta.is_none() || args.iters.is_none();
    let preset = if needs_preset {
        let mut inputs = TheoryInputs::new(g.n() as u64, args.d as u64, args.eps, args.delta);
        inputs.k1 = lipschitz.k1;
        inputs.k2 = lipschitz.k2;
        inputs.k3 = lipschitz.k3;
        Some(theory::practical_preset(
            &inputs,
            DEFAULT_ETA_SCALE,
            DEFAULT_PRACTICAL_ITERATIONS,
        )?)
    } else {
        None
    };
    let pick = |user: Option<f64>, planned: Option<f64>| user.or(planned).expect("preset computed");
    let eta = pick(args.eta, preset.map(|p| p.eta));
    let beta = pick(args.beta, preset.map(|p| p.beta));
    let iterations = args
        .iters
        .or(preset.map(|p| p.iterations))
        .expect("preset computed");
    let mut source = serde_json::Map::new();
    for (name, user) in [
        ("eta", args.eta.is_some()),
        ("beta", args.beta.is_some()),
        ("iterations", args.iters.is_some()),
    ] {
        source.insert(
            name.into(),
            json!(if user { "user" } else { "practical_preset" }),
        );
        if !user {
            warnings.push(format!("{name} not supplied; practical preset used"));
        }
    }
    if args.d < 3 {
        warnings.push(format!(
            "d = {} < 3: outside the range covered by the convergence guarantees",
            args.d
        ));
    }
    if (args.d + 1) * (args.d + 2) / 2 <= g.n() {
        warnings.push(format!(
            "(d+1)(d+2)/2 = {} <= n = {}: spurious local minima are possible",
            (args.d + 1) * (args.d + 2) / 2,
            g.n()
        ));
    }

    let mut config = LangevinConfig::new(eta, beta, iterations);
    config.mode = args.mode();
    config.record_every = args.record_every;
    config.validate()?;
    let horizon = config.horizon()?;

    let chains: Vec<(ChainResult, f64)> = (0..args.chains)
        .into_par_iter()
        .map(|c| -> Result<(ChainResult, f64), CliError> {
            let chain_start = Instant::now();
            let x0 = random_point(shape, &mut stream(args.seed, INIT_STREAM + c as u64));
            let mut run = run_chain(
                &objective,
                x0,
                config,
                &mut stream(args.seed, CHAIN_STREAM + c as u64),
            )?;
            run.seed = Some(args.seed);
            let cut = bm_cut_report(
                &g,
                &run.best_position,
                args.gw_samples,
                &mut stream(args.seed, ROUNDING_STREAM + c as u64),
            )?;
            Ok((
                ChainResult { chain: c, run, cut },
                chain_start.elapsed().as_secs_f64(),
            ))
        })
        .collect::<Result<_, _>>()?;

    let approximate: u64 = chains.iter().map(|(r, _)| r.run.approximate_steps).sum();
    if approximate > 0 {
        warnings.push(format!(
            "{approximate} Brownian increments used a small-horizon approximation (horizon {horizon:e})"
        ));
    }
    let best = chains
        .iter()
        .map(|(r, _)| r)
        .max_by(|a, b| {
            a.cut
                .best_cut
                .total_cmp(&b.cut.best_cut)
                .then(b.run.best_value.total_cmp(&a.run.best_value))
                .then(b.chain.cmp(&a.chain))
        })
        .expect("at least one chain");
    let best_value = chains
        .iter()
        .map(|(r, _)| r.run.best_value)
        .fold(f64::INFINITY, f64::min);

    let baseline = if args.baseline {
        let x0 = random_point(shape, &mut stream(args.seed, BASELINE_STREAM));
        let out = rgd_baseline(&objective, &x0, eta, BASELINE_MAX_ITERS, BASELINE_GRAD_TOL)?;
        if !out.converged {
            warnings.push(format!(
                "baseline stopped at gradient norm {:e} after {} iterations",
                out.grad_norm, out.iterations
            ));
        }
        Some(out)
    } else {
        None
    };

    if let Some(path) = &args.trajectory_csv {
        write_trajectories(path, chains.iter().map(|(r, _)| r))?;
    }

    let results = json!({
        "n": g.n(),
        "m": g.m(),
        "parameters": {
            "eta": eta,
            "beta": beta,
            "iterations": iterations,
            "horizon": horizon,
            "source": source,
        },
        "lipschitz": lipschitz,
        "offset_bound": objective.offset_bound(),
        "best_chain": best.chain,
        "best_cut": best.cut.best_cut,
        "best_assignment": best.cut.best_assignment,
        "best_value": best_value,
        "brute_force_optimum": best.cut.brute_force_optimum,
        "baseline": baseline,
        "chains": chains.iter().map(|(r, _)| r).collect::<Vec<_>>(),
    });
    let provenance = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "initialization": "independent uniform point on every factor",
        "lipschitz": "conservative bounds from the max absolute row sum of A; not sharp",
        "objective": "F(x) = -<x, A x> with A = -A_G, reported without the constant offset",
        "rng": format!(
            "ChaCha8 seeded with {}; chain c draws its start from stream {INIT_STREAM:#x}+c, its increments from {CHAIN_STREAM:#x}+c and its rounding from {ROUNDING_STREAM:#x}+c",
            args.seed
        ),
        "timing": {
            "total_seconds": start.elapsed().as_secs_f64(),
            "chain_seconds": chains.iter().map(|(_, s)| *s).collect::<Vec<_>>(),
            "run_seconds": chains.iter().map(|(r, _)| r.run.wall_clock_seconds).collect::<Vec<_>>(),
        },
    });
    Ok(Outcome {
        report: report(args, Some(args.seed), results, provenance, warnings),
        passed: true,
    })
}

fn write_trajectories<'a>(
    path: &Path,
    chains: impl Iterator<Item = &'a ChainResult>,
) -> Result<(), CliError> {
    let io = |e: std::io::Error| usage(format!("{}: {e}", path.display()));
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io)?);
    writeln!(out, "chain,step,value,distance").map_err(io)?;
    for c in chains {
        for r in &c.run.records {
            writeln!(out, "{},{},{},{}", c.chain, r.step, r.value, r.distance).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn cmd_plan(args: &PlanArgs) -> Result<Outcome, CliError> {
    let mut defaults = Vec::new();
    let graph = args.graph.as_deref().map(load_graph).transpose()?;
    let n = match (&graph, args.n) {
        (Some(g), None) => g.n() as u64,
        (Some(g), Some(n)) if n != g.n() as u64 => {
            return Err(usage(format!(
                "--n {n} disagrees with the graph's {} vertices",
                g.n()
            )))
        }
        (_, Some(n)) => n,
        (None, None) => return Err(usage("plan needs --n or --graph")),
    };
    let mut inputs = TheoryInputs::new(n, args.d, args.eps, args.delta);
    let derived = graph.as_ref().map(|g| {
        let shape = ManifoldShape::new(g.n(), args.d as usize);
        shape.map(|s| lipschitz_estimates(g.cost_matrix(), s))
    });
    let derived = derived.transpose()?;
    let mut constant = |name: &'static str,
                        user: Option<f64>,
                        from_graph: Option<f64>,
                        slot: &mut f64| match user.or(from_graph) {
        Some(v) => *slot = v,
        None => defaults.push(name),
    };
    constant("K1", args.k1, derived.map(|l| l.k1), &mut inputs.k1);
    constant("K2", args.k2, derived.map(|l| l.k2), &mut inputs.k2);
    constant("K3", args.k3, derived.map(|l| l.k3), &mut inputs.k3);
    constant("lambda_min", args.lambda_min, None, &mut inputs.lambda_min);
    constant(
        "lambda_tilde",
        args.lambda_tilde,
        None,
        &mut inputs.lambda_tilde,
    );
    constant("H0", args.h0, None, &mut inputs.h0);
    inputs.alpha_override = args.alpha;
    inputs.c_f = args.c_f;
    let plan = theory::plan(&inputs, args.eta_scale, args.practical_iters, &defaults)?;
    let warnings = plan.warnings.clone();
    let provenance = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "formulas": plan.provenance,
        "lipschitz_from_graph": derived.is_some(),
    });
    Ok(Outcome {
        report: report(
            args,
            None,
            serde_json::to_value(&plan).expect("plan serializes"),
            provenance,
            warnings,
        ),
        passed: true,
    })
}

#[derive(Debug, Serialize)]
struct RadialSummary {
    d: usize,
    t: f64,
    exact: bool,
    checks: Vec<Check>,
}

pub fn cmd_validate_sampler(args: &ValidateArgs) -> Result<Outcome, CliError> {
    if args.d.is_empty() || args.t.is_empty() {
        return Err(usage("--d and --t need at least one value"));
    }
    if let Some(&d) = args.d.iter().find(|&&d| d < 2) {
        return Err(usage(format!("--d must be >= 2, got {d}")));
    }
    for &t in &args.t {
        check_positive("t", t)?;
    }
    if args.samples == 0 {
        return Err(usage("--samples must be >= 1"));
    }
    let start = Instant::now();
    let tol = SeriesTolerances::default();
    let grid: Vec<(usize, f64)> = args
        .d
        .iter()
        .flat_map(|&d| args.t.iter().map(move |&t| (d, t)))
        .collect();
    let radial: Vec<RadialSummary> = grid
        .par_iter()
        .enumerate()
        .map(|(k, &(d, t))| -> Result<RadialSummary, CliError> {
            let base = VALIDATION_STREAM + 16 * k as u64;
            let sample = sample_radial(d, t, args.samples, tol, &mut stream(args.seed, base))?;
            let mut checks = vec![cosine_moment_check(d, t, &sample)];
            if d >= 3 {
                checks.push(tan_squared_check(d, t, &sample));
                checks.push(radial_square_check(d, t, &sample));
            }
            checks.push(wf_mean_check(
                d,
                t,
                args.samples,
                tol,
                &mut stream(args.seed, base + 1),
            )?);
            if t >= tol.small_t_threshold {
                checks.extend(density_checks(d as u32, t, DENSITY_NORMALIZATION_TOL, tol)?);
            }
            Ok(RadialSummary {
                d,
                t,
                exact: sample.exact,
                checks,
            })
        })
        .collect::<Result<_, _>>()?;
    let offset = VALIDATION_STREAM + 16 * grid.len() as u64;
    let chi: Vec<(ChiSquareCheck, Check)> = CHI_SQUARE_PAIRS
        .par_iter()
        .enumerate()
        .map(|(k, &(theta, t))| -> Result<_, CliError> {
            let gof = chi_square_ainfty(
                theta,
                t,
                args.samples,
                CHI_SQUARE_SIGNIFICANCE,
                tol,
                &mut stream(args.seed, offset + k as u64),
            )?;
            Ok((
                gof,
                qm_normalization_check(theta, t, QM_NORMALIZATION_TOL, tol)?,
            ))
        })
        .collect::<Result<_, _>>()?;

    let mut warnings = Vec::new();
    for r in radial.iter().filter(|r| !r.exact) {
        warnings.push(format!(
            "d={} t={}: horizon below the small-time threshold, draws use the normal approximation",
            r.d, r.t
        ));
    }
    for r in radial.iter().filter(|r| r.t < tol.small_t_threshold) {
        warnings.push(format!(
            "d={} t={}: density checks skipped below the small-time threshold",
            r.d, r.t
        ));
    }
    if args.samples < 1000 {
        warnings.push(format!(
            "{} samples: standard errors are wide",
            args.samples
        ));
    }
    let passed = radial.iter().flat_map(|r| &r.checks).all(|c| c.passed)
        && chi.iter().all(|(g, q)| g.passed && q.passed);
    let results = json!({
        "passed": passed,
        "radial": radial,
        "chi_square": chi.iter().map(|(g, _)| g).collect::<Vec<_>>(),
        "qm_normalization": chi.iter().map(|(_, q)| q).collect::<Vec<_>>(),
    });
    let provenance = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "rng": format!("ChaCha8 seeded with {}; streams from {VALIDATION_STREAM:#x}", args.seed),
        "timing": { "total_seconds": start.elapsed().as_secs_f64() },
    });
    Ok(Outcome {
        report: report(args, Some(args.seed), results, provenance, warnings),
        passed,
    })
}

pub fn cmd_brute(args: &BruteArgs) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let g = load_graph(&args.graph)?;
    if g.n() > BRUTE_FORCE_MAX_N {
        return Err(usage(format!(
            "{}: exhaustive search limited to n <= {BRUTE_FORCE_MAX_N}, got n = {}",
            args.graph.display(),
            g.n()
        )));
    }
    let (assignment, optimum) = brute_force_maxcut(&g)?;
    let results = json!({
        "n": g.n(),
        "m": g.m(),
        "optimum": optimum,
        "assignment": assignment,
    });
    let provenance = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "timing": { "total_seconds": start.elapsed().as_secs_f64() },
    });
    Ok(Outcome {
        report: report(args, None, results, provenance, Vec::new()),
        passed: true,
    })
}

fn report_path(command: &Command) -> Option<&Path> {
    match command {
        Command::Solve(a) => a.report.as_deref(),
        Command::Plan(a) => a.report.as_deref(),
        Command::ValidateSampler(a) => a.report.as_deref(),
        Command::Brute(a) => a.report.as_deref(),
    }
}

pub fn execute(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Solve(a) => cmd_solve(a),
        Command::Plan(a) => cmd_plan(a),
        Command::ValidateSampler(a) => cmd_validate_sampler(a),
        Command::Brute(a) => cmd_brute(a),
    }
}

/// Runs a parsed command line, writes the report and returns the exit code.
pub fn run(cli: &Cli) -> u8 {
    let outcome = match execute(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let text = render(&outcome.report);
    let written = match report_path(&cli.command) {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    if outcome.passed {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    }
}
