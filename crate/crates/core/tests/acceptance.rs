//! Acceptance battery. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test --release --test acceptance` for realistic timings.

use rand::Rng;
use rayon::prelude::*;
use std::path::Path;
use std::time::Instant;

use sphere_langevin::cli::{cmd_solve, render, strip_timing, ModeArg, SolveArgs};
use sphere_langevin::geometry::{
    exp_map, geodesic_distance, log_map, random_point, random_tangent, ManifoldShape,
};
use sphere_langevin::maxcut::{complete_graph, cycle_graph, GraphInstance};
use sphere_langevin::objective::{bm_riemannian_grad, bm_value, SymmetricCostMatrix};
use sphere_langevin::rng::stream;
use sphere_langevin::theory::{
    kl_bound, lsi_alpha, plan_beta, plan_eta, plan_iterations, TheoryInputs,
};
use sphere_langevin::validation::{
    chi_square_ainfty, cosine_moment_check, density_checks, qm_normalization_check,
    radial_square_check, sample_radial, tan_squared_check, Check,
};
use sphere_langevin::wright_fisher::SeriesTolerances;

const SEED: u64 = 20_240_601;
const RADIAL_SAMPLES: usize = 100_000;
const SOLVE_SEEDS: u64 = 10;

struct Outcome {
    passed: bool,
    detail: String,
}

fn summarize(checks: &[Check]) -> String {
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        format!("{} checks", checks.len())
    } else {
        format!(
            "{} of {} checks failed: {}",
            failed.len(),
            checks.len(),
            failed.join(", ")
        )
    }
}

fn geometry_fuzz() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(SEED, 1);
    let (mut round_trip, mut norm, mut length) = (0f64, 0f64, 0f64);
    for _ in 0..10_000 {
        let n = rng.random_range(1..=4);
        let d = rng.random_range(1..=6);
        let x = random_point(ManifoldShape::new(n, d).unwrap(), &mut rng);
        let v = random_tangent(&x, 1.0, &mut rng);
        let t = rng.random_range(1e-6..=2.0);
        // Keep every factor's geodesic strictly inside the injectivity radius.
        let longest = v
            .factors()
            .map(|f| f.iter().map(|c| c * c).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let v = v.scaled(rng.random_range(0.0..3.0) / (t * longest.max(1e-300)));
        let y = exp_map(&x, &v, t).unwrap();
        norm = norm.max(y.max_norm_error());
        let back = log_map(&x, &y).unwrap();
        let err = back
            .as_slice()
            .iter()
            .zip(v.as_slice())
            .map(|(b, v)| (b - t * v).abs())
            .fold(0.0, f64::max);
        round_trip = round_trip.max(err);
        length = length.max((geodesic_distance(&x, &y).unwrap() - t * v.norm()).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        passed: round_trip <= 1e-8 && norm <= 1e-10 && length <= 1e-9 && secs < 10.0,
        detail: format!(
            "round trip {round_trip:.2e} (<= 1e-8), norm {norm:.2e} (<= 1e-10), length {length:.2e} (<= 1e-9), {secs:.2}s (< 10s)"
        ),
    }
}

/// Radial samples for every `(d, t)` on the grid, drawn in parallel.
fn radial_grid() -> Vec<(usize, f64, sphere_langevin::validation::RadialSample)> {
    let grid: Vec<(usize, f64)> = [3usize, 5, 10]
        .iter()
        .flat_map(|&d| [0.1, 0.5, 1.0].map(move |t| (d, t)))
        .collect();
    grid.par_iter()
        .enumerate()
        .map(|(k, &(d, t))| {
            let s = sample_radial(
                d,
                t,
                RADIAL_SAMPLES,
                SeriesTolerances::default(),
                &mut stream(SEED, 100 + k as u64),
            )
            .unwrap();
            (d, t, s)
        })
        .collect()
}

fn radial_moment(samples: &[(usize, f64, sphere_langevin::validation::RadialSample)]) -> Outcome {
    let checks: Vec<Check> = samples
        .iter()
        .map(|(d, t, s)| cosine_moment_check(*d, *t, s))
        .collect();
    let worst = checks
        .iter()
        .map(|c| (c.observed - c.target).abs() / c.standard_error.unwrap())
        .fold(0.0, f64::max);
    let exact = samples.iter().all(|(_, _, s)| s.exact);
    Outcome {
        passed: exact && checks.iter().all(|c| c.passed),
        detail: format!(
            "{}, worst deviation {worst:.2} SE (<= 3)",
            summarize(&checks)
        ),
    }
}

fn tan_squared(samples: &[(usize, f64, sphere_langevin::validation::RadialSample)]) -> Outcome {
    let checks: Vec<Check> = samples
        .iter()
        .filter(|(d, _, _)| *d == 3 || *d == 5)
        .flat_map(|(d, t, s)| [tan_squared_check(*d, *t, s), radial_square_check(*d, *t, s)])
        .collect();
    let tightest = checks
        .iter()
        .map(|c| c.observed / c.target)
        .fold(0.0, f64::max);
    Outcome {
        passed: checks.iter().all(|c| c.passed),
        detail: format!("{}, largest mean/bound {tightest:.3}", summarize(&checks)),
    }
}

fn sampler_series() -> Outcome {
    let tol = SeriesTolerances::default();
    let pairs = [(3.0, 0.5), (5.0, 1.0), (1.5, 2.0)];
    let gof: Vec<_> = pairs
        .par_iter()
        .enumerate()
        .map(|(k, &(theta, t))| {
            chi_square_ainfty(
                theta,
                t,
                RADIAL_SAMPLES,
                0.01,
                tol,
                &mut stream(SEED, 200 + k as u64),
            )
            .unwrap()
        })
        .collect();
    let mut checks: Vec<Check> = pairs
        .iter()
        .map(|&(theta, t)| qm_normalization_check(theta, t, 1e-4, tol).unwrap())
        .collect();
    for d in [3u32, 5, 10] {
        for t in [0.1, 0.5, 1.0] {
            checks.extend(
                density_checks(d, t, 1e-3, tol)
                    .unwrap()
                    .into_iter()
                    .filter(|c| c.name.starts_with("density_normalization")),
            );
        }
    }
    let chi: Vec<String> = gof
        .iter()
        .map(|g| {
            format!(
                "({},{}) X2={:.1}/{:.1} p={:.3}",
                g.theta, g.t, g.statistic, g.critical_value, g.p_value
            )
        })
        .collect();
    Outcome {
        passed: gof.iter().all(|g| g.passed) && checks.iter().all(|c| c.passed),
        detail: format!("chi-square {}; {}", chi.join(" "), summarize(&checks)),
    }
}

fn random_cost(n: usize, rng: &mut impl Rng) -> SymmetricCostMatrix {
    let entries: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, rng.random_range(-2.0..2.0)))
        .collect();
    SymmetricCostMatrix::from_entries(n, entries).unwrap()
}

fn gradient_check() -> Outcome {
    let mut rng = stream(SEED, 3);
    let (mut worst_rel, mut worst_tangency) = (0f64, 0f64);
    for _ in 0..1000 {
        // n = 1 makes F constant on M, so the relative error is undefined.
        let n = rng.random_range(2..=8);
        let d = rng.random_range(1..=5);
        let a = random_cost(n, &mut rng);
        let x = random_point(ManifoldShape::new(n, d).unwrap(), &mut rng);
        let v = random_tangent(&x, 1.0, &mut rng);
        let g = bm_riemannian_grad(&a, &x).unwrap();
        let back = v.scaled(-1.0);
        let f = |s: f64| {
            let y = if s >= 0.0 {
                exp_map(&x, &v, s)
            } else {
                exp_map(&x, &back, -s)
            };
            bm_value(&a, &y.unwrap()).unwrap()
        };
        // Richardson-extrapolated central difference along the geodesic.
        let central = |h: f64| (f(h) - f(-h)) / (2.0 * h);
        let h = 1e-3;
        let fd = (4.0 * central(h / 2.0) - central(h)) / 3.0;
        let an = g.inner(&v).unwrap();
        worst_rel = worst_rel.max((fd - an).abs() / an.abs());
        for (gi, xi) in g.factors().zip(x.factors()) {
            let dot: f64 = gi.iter().zip(xi).map(|(a, b)| a * b).sum();
            worst_tangency = worst_tangency.max(dot.abs());
        }
    }
    Outcome {
        passed: worst_rel <= 1e-6 && worst_tangency <= 1e-10,
        detail: format!("worst relative error {worst_rel:.2e} (<= 1e-6), tangency {worst_tangency:.2e} (<= 1e-10)"),
    }
}

fn solve_args(graph: &Path, seed: u64) -> SolveArgs {
    SolveArgs {
        graph: graph.to_path_buf(),
        d: 3,
        eta: None,
        beta: None,
        iters: None,
        seed,
        gw_samples: 64,
        record_every: 500,
        mode: ModeArg::Tangent,
        small_t: 0.05,
        chains: 1,
        eps: 0.01,
        delta: 0.1,
        baseline: true,
        trajectory_csv: None,
        report: None,
    }
}

struct SolveRun {
    best_cut: f64,
    optimum: f64,
    best_value: f64,
    baseline_value: f64,
}

fn solve_runs(dir: &Path) -> (Vec<(String, Vec<SolveRun>)>, f64) {
    let start = Instant::now();
    let graphs: [(&str, GraphInstance); 2] = [("C5", cycle_graph(5)), ("K3", complete_graph(3))];
    let runs = graphs
        .iter()
        .map(|(name, g)| {
            let path = dir.join(format!("{name}.txt"));
            std::fs::write(&path, g.to_edge_list()).unwrap();
            let runs = (0..SOLVE_SEEDS)
                .map(|seed| {
                    let r = cmd_solve(&solve_args(&path, seed)).unwrap().report["results"].clone();
                    SolveRun {
                        best_cut: r["best_cut"].as_f64().unwrap(),
                        optimum: r["brute_force_optimum"].as_f64().unwrap(),
                        best_value: r["best_value"].as_f64().unwrap(),
                        baseline_value: r["baseline"]["value"].as_f64().unwrap(),
                    }
                })
                .collect();
            (name.to_string(), runs)
        })
        .collect();
    (runs, start.elapsed().as_secs_f64())
}

fn optimization(runs: &[(String, Vec<SolveRun>)], secs: f64) -> Outcome {
    let mut passed = secs < 60.0;
    let mut parts = Vec::new();
    for (name, rs) in runs {
        let hits = rs.iter().filter(|r| r.best_cut == r.optimum).count();
        let worst = rs
            .iter()
            .map(|r| r.best_cut / r.optimum)
            .fold(f64::INFINITY, f64::min);
        passed &= hits * 10 >= 9 * rs.len() && worst >= 0.878;
        parts.push(format!(
            "{name}: optimum in {hits}/{} seeds, worst ratio {worst:.3}",
            rs.len()
        ));
    }
    Outcome {
        passed,
        detail: format!("{}, {secs:.2}s (< 60s)", parts.join("; ")),
    }
}

fn baseline(runs: &[(String, Vec<SolveRun>)]) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, rs) in runs {
        let gap = rs
            .iter()
            .map(|r| (r.baseline_value - r.best_value).abs())
            .fold(0.0, f64::max);
        passed &= gap <= 1e-3;
        parts.push(format!("{name}: largest |rgd - langevin| {gap:.2e}"));
    }
    Outcome {
        passed,
        detail: format!("{} (<= 1e-3)", parts.join("; ")),
    }
}

fn planner() -> Outcome {
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let beta = plan_beta(&TheoryInputs::new(10, 5, 0.5, 0.1)).unwrap();
    let beta_err = rel(beta, 300.0 * 200f64.ln());
    let alpha = lsi_alpha(&TheoryInputs::new(2, 5, 0.5, 0.1), 10.0).unwrap();
    let alpha_err = rel(alpha, 1.0 / 67_900.0);
    let kl_errs = [
        rel(
            kl_bound(1.0, 1.0, 1.0, 1.0, 1, 1, 1.0, 1.0, 1.0).value,
            (-1f64).exp() + 22.0,
        ),
        rel(
            kl_bound(0.0, 1.0, 1.0, 1.0, 1, 1, 1.0, 1.0, 10.0).value,
            32.0,
        ),
        rel(
            kl_bound(3.0, 0.01, 0.5, 4.0, 2, 3, 1.5, 2.0, 7.0).value,
            7.0 * (-0.015f64).exp() + 22.0 * 6.0 * 2.25 * 4.0 * 0.01 * 4.0 / 0.5,
        ),
    ];
    let kl_err = kl_errs.iter().copied().fold(0.0, f64::max);
    // High-precision reference values for the step size and iteration count.
    let unit = TheoryInputs::new(1, 1, 0.5, 0.1);
    let eta_err = rel(plan_eta(&unit, 1.0, 22.0), 2.066_115_702_479_338_8e-5);
    let k = plan_iterations(&unit, 1.0).unwrap();
    let k_err = rel(k.exact_bound, 273_157.967_637_188_6);
    Outcome {
        passed: beta_err <= 1e-9 && alpha_err <= 1e-12 && kl_err <= 1e-12 && eta_err <= 1e-12 && k_err <= 1e-12 && k.iterations == 273_158,
        detail: format!(
            "beta rel {beta_err:.1e} (<= 1e-9), alpha rel {alpha_err:.1e} (<= 1e-12), kl rel {kl_err:.1e} (<= 1e-12), eta rel {eta_err:.1e}, k = {}",
            k.iterations
        ),
    }
}

fn determinism(dir: &Path) -> Outcome {
    let path = dir.join("C5.txt");
    std::fs::write(&path, cycle_graph(5).to_edge_list()).unwrap();
    let mut args = solve_args(&path, 7);
    args.chains = 3;
    args.mode = ModeArg::Exact;
    args.eta = Some(0.05);
    args.beta = Some(50.0);
    args.iters = Some(500);
    args.record_every = 50;
    let render_run = || {
        let mut report = cmd_solve(&args).unwrap().report;
        let had_timing = report["provenance"].get("timing").is_some();
        strip_timing(&mut report);
        (render(&report), had_timing)
    };
    let (a, timed_a) = render_run();
    let (b, timed_b) = render_run();
    Outcome {
        passed: a == b && timed_a && timed_b,
        detail: format!("{} bytes, identical = {}", a.len(), a == b),
    }
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |id: u32, name: &'static str, o: Outcome| {
        println!(
            "[{}] criterion {id} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((id, name, o));
    };
    report(1, "geometry fuzz", geometry_fuzz());
    let radial = radial_grid();
    report(2, "Brownian radial moment", radial_moment(&radial));
    report(3, "tan-squared and radial bounds", tan_squared(&radial));
    report(4, "sampler/series agreement", sampler_series());
    report(5, "gradient correctness", gradient_check());
    let (runs, secs) = solve_runs(dir.path());
    report(6, "Max-Cut end to end", optimization(&runs, secs));
    report(7, "baseline agreement", baseline(&runs));
    report(8, "planner formulas", planner());
    report(9, "determinism", determinism(dir.path()));
    let failed: Vec<u32> = results
        .iter()
        .filter(|(_, _, o)| !o.passed)
        .map(|(id, _, _)| *id)
        .collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
