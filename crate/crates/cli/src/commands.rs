//! One runner per subcommand. Each returns a [`Report`]; writing it out and
//! choosing the exit code is left to the caller.

use crate::error::{CliError, CliResult};
use crate::report::{Check, Report};
use crate::scenario::{load_scenarios, potential_label, PotentialSpec, Scenario};
use crate::{Common, PotentialArgs};
use circle_tci::circle::{grid_angle, measured_rho, Record};
use circle_tci::equilibrium::EquilibriumSolver;
use circle_tci::gas::{
    extrapolate_inverse_n, mcmc_sample, mean_empirical_grid, pressure_mc, write_trace_csv,
    ChainConfig,
};
use circle_tci::sk::{
    log_s_k_series, phi_sweep, pl_verify_circle, s_k, taylor_coefficients, write_sweep_csv,
};
use circle_tci::sun::{
    geodesic_distance, haar_sample_rng, hessian_probe, matching_distance, random_tangent,
};
use circle_tci::transport::{circular_w2, circular_w2_density, tci_check_with, TCI_TOLERANCE};
use circle_tci::{CircleMeasure, Potential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fs::File;
use std::path::Path;

fn spec(args: &PotentialArgs) -> PotentialSpec {
    PotentialSpec {
        q0: args.q0,
        terms: args.terms.clone(),
    }
}

fn check_grid(grid: usize) -> CliResult<()> {
    if grid < 8 {
        return Err(CliError::Usage(format!(
            "grid must be at least 8, got {grid}"
        )));
    }
    Ok(())
}

fn scenarios(c: &Common, command: &str) -> CliResult<Vec<Scenario>> {
    let arg = c
        .scenario
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("{command} needs --scenario")))?;
    let list: Vec<Scenario> = load_scenarios(arg)?
        .into_iter()
        .map(|s| s.with_overrides(c.grid, c.seed))
        .collect();
    for s in &list {
        check_grid(s.grid)?;
    }
    Ok(list)
}

fn distinct_seeds(list: &[Scenario]) -> Vec<u64> {
    let mut seeds = Vec::new();
    for s in list.iter().flat_map(|s| &s.seeds) {
        if !seeds.contains(s) {
            seeds.push(*s);
        }
    }
    seeds
}

fn tci_scenario(s: &Scenario) -> CliResult<Vec<Check>> {
    let q = s.potential.build(s.grid)?;
    let solver = EquilibriumSolver::default();
    let eq = solver.solve(&q)?;
    let tol = s.tolerances.tci.unwrap_or(TCI_TOLERANCE);
    let mut out = Vec::new();
    for recipe in &s.measures {
        for (label, mu) in recipe.resolve(s.grid, &eq, &s.seeds)? {
            let v = tci_check_with(&solver, &q, &mu, s.rho)?;
            out.push(
                Check::new(format!("{}/{label}", s.name), v.slack.ge(-tol))
                    .with("rho", v.rho.rho)
                    .with("W", v.wasserstein)
                    .with("free_entropy", v.free_entropy)
                    .with("slack", v.slack)
                    .with("tolerance", tol),
            );
        }
    }
    Ok(out)
}

/// Free TCI verdict for every measure of every scenario. Scenarios run in
/// parallel; rows keep scenario order.
pub fn tci(c: &Common) -> CliResult<Report> {
    let list = scenarios(c, "tci")?;
    let results: Vec<CliResult<Vec<Check>>> = list
        .par_iter()
        .map(|s| tci_scenario(s).map_err(|e| e.context(&format!("scenario {:?}", s.name))))
        .collect();
    let mut checks = Vec::new();
    for r in results {
        checks.extend(r?);
    }
    Ok(Report::new(
        "tci",
        distinct_seeds(&list),
        TCI_TOLERANCE,
        checks,
    ))
}

pub fn equilibrium(c: &Common, q: &PotentialArgs, measure_out: Option<&Path>) -> CliResult<Report> {
    let targets: Vec<(String, PotentialSpec, usize)> = if c.scenario.is_some() {
        scenarios(c, "equilibrium")?
            .into_iter()
            .map(|s| (s.name, s.potential, s.grid))
            .collect()
    } else {
        let grid = c.grid.unwrap_or(1024);
        check_grid(grid)?;
        let p = spec(q);
        vec![(potential_label(&p), p, grid)]
    };
    if measure_out.is_some() && targets.len() != 1 {
        return Err(CliError::Usage(
            "--measure-out needs exactly one potential".into(),
        ));
    }
    let solver = EquilibriumSolver::default();
    let mut checks = Vec::new();
    for (name, p, grid) in &targets {
        let q = p.build(*grid)?;
        let res = solver
            .solve(&q)
            .map_err(|e| CliError::from(e).context(name))?;
        let w = res
            .nu_q
            .grid_weights()
            .expect("equilibria live on the grid");
        let mass: f64 = w.iter().sum();
        let support = w.iter().filter(|&&x| x > 0.0).count() as f64 / w.len() as f64;
        let valid = (mass - 1.0).abs() <= 1e-12 && w.iter().all(|&x| x >= 0.0);
        let r = &res.solver_report;
        checks.push(
            Check::new(name.clone(), valid)
                .with("potential", potential_label(p))
                .with("grid", *grid)
                .with("rho", measured_rho(&q).rho)
                .with("stage", format!("{:?}", r.stage).to_lowercase())
                .with("iterations", r.iterations)
                .with("gap", r.gap)
                .with("objective_gap", r.objective_gap)
                .with("energy", res.energy)
                .with("b_constant", res.b_constant)
                .with("support_fraction", support),
        );
        if let Some(path) = measure_out {
            let record = res.nu_q.to_record();
            match c.format {
                crate::Format::Csv => record.to_csv(File::create(path)?)?,
                _ => std::fs::write(path, serde_json::to_string(&record)? + "\n")?,
            }
        }
    }
    Ok(Report::new(
        "equilibrium",
        Vec::new(),
        solver.config().gap_tol,
        checks,
    ))
}

/// Read a measure record; `.csv` files use the `angle,value` layout, anything
/// else is JSON.
pub fn read_measure(path: &Path) -> CliResult<CircleMeasure> {
    let what = path.display().to_string();
    let parsed = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        Record::from_csv(File::open(path)?).and_then(CircleMeasure::from_record)
    } else {
        CircleMeasure::from_json(&std::fs::read_to_string(path)?)
    };
    parsed.map_err(|e| CliError::from(e).context(&what))
}

pub fn w2(mu_path: &Path, nu_path: &Path) -> CliResult<Report> {
    let mu = read_measure(mu_path)?;
    let nu = read_measure(nu_path)?;
    let (w, plan) = circular_w2(&mu, &nu)?;
    let mut check = Check::new("W", true)
        .with("W", w)
        .with("cost", plan.cost)
        .with("couplings", plan.couplings.len())
        .with("discretization_bound", plan.discretization_bound);
    if mu.n_grid().is_some() && mu.n_grid() == nu.n_grid() {
        check = check.with("W_density", circular_w2_density(&mu, &nu)?);
    }
    Ok(Report::new("w2", Vec::new(), 0.0, vec![check]))
}

pub fn pressure(
    c: &Common,
    q: &PotentialArgs,
    f: &PotentialArgs,
    ns: &[usize],
    samples: usize,
    nodes: usize,
) -> CliResult<Report> {
    let grid = c.grid.unwrap_or(256);
    check_grid(grid)?;
    let seed = c.seed();
    let qp = spec(q).build(grid)?;
    let fp = spec(f).build(grid)?;
    let oracle = EquilibriumSolver::default().free_pressure(&qp, &fp)?;
    let tolerance = 0.05;
    let mut checks = Vec::new();
    let mut points = Vec::new();
    for &n in ns {
        let cfg = ChainConfig::for_samples(n, samples, 2 * n, seed);
        let est = pressure_mc(&qp, &fp, n, cfg, nodes)
            .map_err(|e| CliError::from(e).context(&format!("N={n}")))?;
        let rates = est.nodes.iter().map(|x| x.acceptance_rate);
        let lo = rates.clone().fold(f64::INFINITY, f64::min);
        let hi = rates.fold(f64::NEG_INFINITY, f64::max);
        let tuned = est.nodes.is_empty() || (lo >= 0.05 && hi <= 0.95);
        checks.push(
            Check::new(format!("N={n}"), tuned)
                .with("estimate", est.estimate)
                .with("std_error", est.std_error)
                .with("oracle", oracle)
                .with("difference", est.estimate - oracle)
                .with("acceptance_min", lo)
                .with("acceptance_max", hi),
        );
        points.push((n, est.estimate));
    }
    if points.len() >= 2 {
        let (limit, slope) = extrapolate_inverse_n(&points);
        let rel = if oracle != 0.0 {
            (limit - oracle).abs() / oracle.abs()
        } else {
            (limit - oracle).abs()
        };
        checks.push(
            Check::new("a + b/N fit", rel <= tolerance)
                .with("limit", limit)
                .with("slope", slope)
                .with("oracle", oracle)
                .with("relative_error", rel),
        );
    }
    Ok(Report::new("pressure", vec![seed], tolerance, checks))
}

pub fn gas(
    c: &Common,
    q: &PotentialArgs,
    n: usize,
    samples: usize,
    thin: usize,
    trace: Option<&Path>,
) -> CliResult<Report> {
    let grid = c.grid.unwrap_or(256);
    check_grid(grid)?;
    let seed = c.seed();
    let qp = spec(q).build(grid)?;
    let cfg = ChainConfig::for_samples(n, samples, thin, seed);
    let (states, stats) = mcmc_sample(&qp, n, cfg)?;
    let nu = EquilibriumSolver::default().solve(&qp)?;
    let w = circular_w2_density(&mean_empirical_grid(&states, grid)?, &nu.nu_q)?;
    if let Some(path) = trace {
        write_trace_csv(&qp, n, cfg, File::create(path)?)?;
    }
    let checks = vec![
        Check::new("acceptance rate", stats.warning.is_none())
            .with("acceptance_rate", stats.acceptance_rate)
            .with("samples", states.len())
            .with("burn_in", cfg.burn_in)
            .with("thin", cfg.thin),
        Check::new("mean eigenvalue density vs ν_Q", true)
            .with("N", n)
            .with("W", w),
    ];
    Ok(Report::new("gas", vec![seed], 0.0, checks))
}

pub fn sk(
    alphas: &[f64],
    n_max: usize,
    d_steps: usize,
    sweep_out: Option<&Path>,
) -> CliResult<Report> {
    if n_max < 2 {
        return Err(CliError::Usage(format!(
            "--n-max must be at least 2, got {n_max}"
        )));
    }
    let c = taylor_coefficients(30);
    let c1_err = (c[0] - 1.0 / 6.0).abs();
    let min_c = c.iter().copied().fold(f64::INFINITY, f64::min);
    let mut series_err: f64 = 0.0;
    for i in 0..=40 {
        let k = -1.0 + i as f64 / 20.0;
        for j in 0..=40 {
            // |k|d² ≤ 1, and d ≤ 3 at k = 0.
            let d = if k == 0.0 {
                3.0 * j as f64 / 40.0
            } else {
                j as f64 / 40.0 / k.abs().sqrt()
            };
            series_err = series_err.max((log_s_k_series(&c, k, d) - s_k(k, d)?.ln()).abs());
        }
    }
    let ns: Vec<usize> = (2..=n_max).collect();
    let thetas: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let rows = phi_sweep(&ns, alphas, &thetas, d_steps)?;
    let worst = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let violations = rows.iter().filter(|r| r.margin < -1e-12).count();
    if let Some(path) = sweep_out {
        write_sweep_csv(&rows, File::create(path)?)?;
    }
    let checks = vec![
        Check::new("c_1 = 1/6", c1_err <= 1e-14)
            .with("c_1", c[0])
            .with("error", c1_err),
        Check::new("c_j > 0 for j ≤ 30", min_c > 0.0).with("min_c_j", min_c),
        Check::new("series vs log S_k on |k|d² ≤ 1", series_err <= 1e-10)
            .with("max_error", series_err),
        Check::new("Φ_θ ≤ −(αθ(1−θ)/2)d²", violations == 0)
            .with("tuples", rows.len())
            .with("violations", violations)
            .with("min_margin", worst),
    ];
    Ok(Report::new("sk", Vec::new(), 1e-12, checks))
}

/// c + Σ_{m ≤ 3}(a_m cos mθ + b_m sin mθ) on the grid, with c above the sum
/// of |coefficients| so the values are positive.
pub fn positive_trig(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let terms: Vec<(f64, f64, f64)> = (1..=3)
        .map(|m| {
            (
                m as f64,
                r.random_range(-1.0..1.0),
                r.random_range(-1.0..1.0),
            )
        })
        .collect();
    let floor: f64 =
        terms.iter().map(|t| t.1.abs() + t.2.abs()).sum::<f64>() + r.random_range(0.05..1.0);
    (0..n)
        .map(|j| {
            let t = grid_angle(j, n);
            floor
                + terms
                    .iter()
                    .map(|&(m, a, b)| a * (m * t).cos() + b * (m * t).sin())
                    .sum::<f64>()
        })
        .collect()
}

pub fn pl_circle(seed: u64, pairs: usize, points: usize, thetas: &[f64]) -> CliResult<Report> {
    if points < 4 {
        return Err(CliError::Usage(format!(
            "--points must be at least 4, got {points}"
        )));
    }
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let fg: Vec<(Vec<f64>, Vec<f64>)> = (0..pairs)
        .map(|_| (positive_trig(&mut r, points), positive_trig(&mut r, points)))
        .collect();
    let mut checks = Vec::new();
    for &theta in thetas {
        let (mut failures, mut swapped, mut worst) = (0usize, 0usize, f64::INFINITY);
        for (f, g) in &fg {
            let rep = pl_verify_circle(f, g, theta)?;
            failures += usize::from(!rep.holds);
            swapped += usize::from(!rep.holds_swapped);
            worst = worst.min(rep.margin);
        }
        checks.push(
            Check::new(format!("θ={theta}"), failures == 0)
                .with("cases", pairs)
                .with("failures", failures)
                .with("min_margin", worst)
                .with("swapped_exponent_failures", swapped),
        );
    }
    Ok(Report::new("pl-circle", vec![seed], 0.0, checks))
}

pub fn sun_check(seed: u64, ns: &[usize], pairs: usize, c: f64) -> CliResult<Report> {
    let q = Potential::cos(64, c);
    let bound = -c.abs() - 1e-3;
    let mut checks = Vec::new();
    for &n in ns {
        let mut r = ChaCha8Rng::seed_from_u64(seed.wrapping_add(n as u64));
        let (mut asym, mut triangle, mut invariance) = (0.0f64, f64::INFINITY, 0.0f64);
        for _ in 0..(pairs / 10).max(1) {
            let u = haar_sample_rng(n, &mut r)?;
            let v = haar_sample_rng(n, &mut r)?;
            let w = haar_sample_rng(n, &mut r)?;
            let d = |a: &_, b: &_| geodesic_distance(a, b);
            let (uv, vu) = (d(&u, &v)?, d(&v, &u)?);
            asym = asym.max((uv - vu).abs());
            triangle = triangle.min(uv + d(&v, &w)? - d(&u, &w)?);
            invariance = invariance
                .max((d(&w.mul(&u), &w.mul(&v))? - uv).abs())
                .max((d(&u.mul(&w), &v.mul(&w))? - uv).abs());
        }
        checks.push(
            Check::new(
                format!("N={n} metric axioms"),
                asym <= 1e-9 && triangle >= -1e-8 && invariance <= 1e-9,
            )
            .with("max_asymmetry", asym)
            .with("min_triangle_slack", triangle)
            .with("max_invariance_defect", invariance),
        );

        let mut gap = f64::INFINITY;
        for _ in 0..pairs {
            let u = haar_sample_rng(n, &mut r)?;
            let v = haar_sample_rng(n, &mut r)?;
            gap = gap.min(
                geodesic_distance(&u, &v)? - matching_distance(&u.eigenangles(), &v.eigenangles())?,
            );
        }
        checks.push(
            Check::new(format!("N={n} δ ≤ d"), gap >= -1e-9)
                .with("pairs", pairs)
                .with("min_d_minus_delta", gap),
        );

        let mut hess = f64::INFINITY;
        for _ in 0..pairs {
            let u = haar_sample_rng(n, &mut r)?;
            let x = random_tangent(n, &mut r);
            hess = hess.min(hessian_probe(&q, &u, &x, 1e-3)?.richardson);
        }
        checks.push(
            Check::new(format!("N={n} Hessian of Tr Q ≥ ρ"), hess >= bound)
                .with("probes", pairs)
                .with("min_second_difference", hess)
                .with("bound", bound),
        );
    }
    Ok(Report::new("sun-check", vec![seed], 1e-9, checks))
}
