//! Acceptance suite. Each criterion runs at its stated tolerance and prints
//! one PASS/FAIL line with the measured quantities and runtime; the process
//! exits non-zero if any criterion fails or overruns its time budget.

use circle_tci::assignment::{brute_force_assignment, hungarian};
use circle_tci::circle::{entropy_dual_value, grid_angle, measured_rho, relative_entropy, Atom};
use circle_tci::equilibrium::{solve_equilibrium_with, EquilibriumSolver, SolverConfig};
use circle_tci::gas::{
    extrapolate_inverse_n, mcmc_sample, pressure_mc, ChainConfig, PressureEstimate,
};
use circle_tci::sk::{log_s_k_series, phi_sweep, pl_verify_circle, s_k, taylor_coefficients};
use circle_tci::sun::{
    geodesic_distance, haar_sample_rng, hessian_probe, matching_distance, pl_hypothesis_check,
    random_tangent,
};
use circle_tci::transport::{
    circular_w2, kantorovich_dual, tci_check_with, QuadraticInfConvolution,
};
use circle_tci::{angular_distance, CircleMeasure, Potential, Result, TWO_PI};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::process::ExitCode;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, detail }
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Result<Outcome>,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn taylor() -> Result<Outcome> {
    let c = taylor_coefficients(30);
    let c1_err = (c[0] - 1.0 / 6.0).abs();
    let positive = c.iter().all(|&x| x > 0.0);
    let mut series_err: f64 = 0.0;
    for i in 0..=40 {
        let k = -1.0 + i as f64 / 20.0;
        for j in 0..=40 {
            let d = if k == 0.0 {
                3.0 * j as f64 / 40.0
            } else {
                j as f64 / 40.0 / k.abs().sqrt()
            };
            let exact = s_k(k, d)?.ln();
            series_err = series_err.max((log_s_k_series(&c, k, d) - exact).abs());
        }
    }
    Ok(Outcome::new(
        c1_err <= 1e-14 && positive && series_err <= 1e-10,
        format!("|c_1 − 1/6| = {c1_err:.1e}, c_j > 0 (j ≤ 30): {positive}, max series error {series_err:.1e}"),
    ))
}

fn phi_bound_sweep() -> Result<Outcome> {
    let ns: Vec<usize> = (2..=16).collect();
    let thetas: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let rows = phi_sweep(&ns, &[0.5, 1.0, 2.0], &thetas, 25)?;
    let worst = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let violations = rows.iter().filter(|r| r.margin < -1e-12).count();
    Ok(Outcome::new(
        rows.len() >= 10_000 && violations == 0,
        format!(
            "{} tuples, {violations} violations, min margin {worst:.3e}",
            rows.len()
        ),
    ))
}

fn cosine_equilibrium() -> Result<Outcome> {
    let n = 1024;
    let solver = EquilibriumSolver::default();
    let res = solver.solve(&Potential::cos(n, 1.0))?;
    let dens: Vec<f64> = res
        .nu_q
        .grid_weights()
        .unwrap()
        .iter()
        .map(|w| w * n as f64 / TWO_PI)
        .collect();
    let analytic = dens
        .iter()
        .enumerate()
        .map(|(j, d)| (d - (1.0 - grid_angle(j, n).cos()) / TWO_PI).abs())
        .fold(0.0, f64::max);

    let fine = 4096;
    let cfg = SolverConfig {
        force_simplex: true,
        gap_tol: 1e-11,
        ..SolverConfig::default()
    };
    let oracle = solve_equilibrium_with(&Potential::cos(fine, 1.0), &cfg)?;
    let ow = oracle.nu_q.grid_weights().unwrap();
    let against_oracle = dens
        .iter()
        .enumerate()
        .map(|(j, d)| (d - ow[4 * j] * fine as f64 / TWO_PI).abs())
        .fold(0.0, f64::max);
    let b_err = (res.b_constant - 0.25).abs();
    Ok(Outcome::new(
        analytic <= 1e-6 && against_oracle <= 1e-6 && b_err <= 1e-6,
        format!(
            "L∞ vs (1−cos)/2π {analytic:.1e}, vs simplex oracle (n=4096, {} it., gap {:.1e}) {against_oracle:.1e}, |B − 1/4| {b_err:.1e}",
            oracle.solver_report.iterations,
            oracle.solver_report.gap
        ),
    ))
}

fn w2_exactness() -> Result<Outcome> {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    let mut brute_checked = 0;
    for _ in 0..200 {
        let n = r.random_range(1..=64);
        let a: Vec<f64> = (0..n).map(|_| r.random_range(0.0..TWO_PI)).collect();
        let b: Vec<f64> = (0..n).map(|_| r.random_range(0.0..TWO_PI)).collect();
        let cost: Vec<f64> = (0..n * n)
            .map(|k| 0.5 * angular_distance(a[k / n], b[k % n]).powi(2) / n as f64)
            .collect();
        let (oracle, _) = hungarian(&cost, n);
        if n <= 8 {
            let (brute, _) = brute_force_assignment(&cost, n);
            worst = worst.max((brute - oracle).abs());
            brute_checked += 1;
        }
        let (w, _) = circular_w2(
            &CircleMeasure::equal_atoms(&a)?,
            &CircleMeasure::equal_atoms(&b)?,
        )?;
        worst = worst.max((w * w - oracle).abs());
    }
    Ok(Outcome::new(
        worst <= 1e-10,
        format!("200 pairs ({brute_checked} also by permutation search), max |W² − assignment| {worst:.1e}"),
    ))
}

fn random_atoms(r: &mut ChaCha8Rng, max: usize) -> Result<CircleMeasure> {
    let n = r.random_range(1..=max);
    let masses: Vec<f64> = (0..n).map(|_| r.random_range(0.05..1.0)).collect();
    let total: f64 = masses.iter().sum();
    CircleMeasure::atomic(
        masses
            .iter()
            .map(|m| Atom {
                angle: r.random_range(0.0..TWO_PI),
                mass: m / total,
            })
            .collect(),
    )
}

fn kantorovich() -> Result<Outcome> {
    let mut r = rng(5);
    let mut worst: f64 = 0.0;
    let mut feasibility: f64 = 0.0;
    for i in 0..50 {
        let rho_prime = [0.2, 1.0, 3.0][i % 3];
        let mu = random_atoms(&mut r, 24)?;
        let nu = random_atoms(&mut r, 24)?;
        let dual = kantorovich_dual(&mu, &nu, rho_prime)?;
        let (w, _) = circular_w2(&mu, &nu)?;
        worst = worst.max((dual.value - rho_prime * w * w).abs());
        feasibility = feasibility.max(dual.constraint_violation);
    }
    Ok(Outcome::new(
        worst <= 1e-8 && feasibility <= 1e-9,
        format!(
            "50 instances, max |dual − ρ′W²| {worst:.1e}, max dual infeasibility {feasibility:.1e}"
        ),
    ))
}

fn random_grid_density(
    r: &mut ChaCha8Rng,
    n: usize,
    modes: usize,
    amp: f64,
) -> Result<CircleMeasure> {
    let terms: Vec<(f64, f64, f64)> = (1..=modes)
        .map(|m| {
            (
                m as f64,
                r.random_range(-amp..amp),
                r.random_range(-amp..amp),
            )
        })
        .collect();
    CircleMeasure::from_density(n, move |t: f64| {
        terms
            .iter()
            .map(|&(m, a, b)| a * (m * t).cos() + b * (m * t).sin())
            .sum::<f64>()
            .exp()
    })
}

fn entropy_variational() -> Result<Outcome> {
    let mut r = rng(6);
    let n = 128;
    let mut attain: f64 = 0.0;
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..10 {
        let mu = random_grid_density(&mut r, n, 4, 1.0)?;
        let nu = random_grid_density(&mut r, n, 4, 1.0)?;
        let s = relative_entropy(&mu, &nu)?.finite().unwrap();
        let opt: Vec<f64> = mu
            .grid_weights()
            .unwrap()
            .iter()
            .zip(nu.grid_weights().unwrap())
            .map(|(a, b)| (a / b).ln())
            .collect();
        attain = attain.max((entropy_dual_value(&mu, &nu, &opt)? - s).abs());
        for k in 0..100 {
            let f: Vec<f64> = match k % 3 {
                0 => (0..n).map(|_| r.random_range(-3.0..3.0)).collect(),
                1 => opt.iter().map(|v| v + r.random_range(-0.1..0.1)).collect(),
                _ => opt
                    .iter()
                    .map(|v| (1.0 + r.random_range(-0.5..0.5)) * v)
                    .collect(),
            };
            excess = excess.max(entropy_dual_value(&mu, &nu, &f)? - s);
        }
    }
    Ok(Outcome::new(
        attain <= 1e-10 && excess <= 1e-10,
        format!("|dual(log dμ/dν) − S| ≤ {attain:.1e}; 1000 random f, max dual − S = {excess:.2e}"),
    ))
}

/// Two-mode trigonometric potential rescaled to the given ρ.
fn two_mode(n: usize, rho: f64, r: &mut ChaCha8Rng) -> Result<Potential> {
    let shape = Potential::trig(
        n,
        0.0,
        &[
            (1, r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)),
            (2, r.random_range(-0.5..0.5), r.random_range(-0.5..0.5)),
        ],
    )?;
    Ok(shape.scale(rho / measured_rho(&shape).rho))
}

fn tci_matrix() -> Result<Outcome> {
    let n = 256;
    let mut r = rng(7);
    let solver = EquilibriumSolver::default();
    let strata = [-0.3, 0.0, -0.45, -0.1];
    let mut potentials: Vec<(f64, Potential)> = Vec::new();
    for &rho in &strata {
        if rho == 0.0 {
            potentials.push((rho, Potential::zero(n)));
            potentials.push((rho, Potential::zero(n)));
        } else {
            potentials.push((rho, Potential::cos(n, -rho)));
            potentials.push((rho, two_mode(n, rho, &mut r)?));
        }
    }

    let mut pairs = 0;
    let mut per_stratum = [0usize; 4];
    let mut worst = f64::INFINITY;
    let mut worst_ratio: f64 = 0.0;
    let mut failures = Vec::new();
    for (pi, (rho, q)) in potentials.iter().enumerate() {
        let nu = solver.solve(q)?.nu_q.clone();
        for k in 0..64 {
            let mu = match k % 4 {
                0 => random_grid_density(&mut r, n, 4, 1.0)?,
                1 => {
                    let (c, w) = (r.random_range(0.0..TWO_PI), r.random_range(0.1..1.0));
                    CircleMeasure::from_density(n, move |t: f64| {
                        (((t - c).cos() - 1.0) / (w * w)).exp()
                    })?
                }
                2 => {
                    let (c, m) = (r.random_range(0.0..TWO_PI), r.random_range(1..=3) as f64);
                    let eps = 10f64.powf(r.random_range(-4.0..-0.7));
                    let bump =
                        CircleMeasure::from_density(n, move |t: f64| 1.0 + (m * (t - c)).cos())?;
                    nu.mix(&bump, eps)?
                }
                _ => nu.mix(
                    &random_grid_density(&mut r, n, 6, 0.5)?,
                    r.random_range(0.01..0.5),
                )?,
            };
            let v = tci_check_with(&solver, q, &mu, None)?;
            let slack = v.slack.to_f64();
            pairs += 1;
            per_stratum[strata.iter().position(|s| s == rho).unwrap()] += 1;
            worst = worst.min(slack);
            if let Some(s) = v.free_entropy.finite() {
                if s > 0.0 {
                    worst_ratio = worst_ratio.max(v.rho.tci_factor() * v.wasserstein.powi(2) / s);
                }
            }
            if !v.holds {
                failures.push(format!("Q#{pi} μ#{k} slack {slack:.3e}"));
            }
        }
    }

    // No periodic potential has ρ > 0, so that stratum is empty; assert it.
    let mut max_rho = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let terms: Vec<(usize, f64, f64)> = (1..=4)
            .map(|m| (m, r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
            .collect();
        max_rho = max_rho.max(measured_rho(&Potential::trig(64, 0.0, &terms)?).rho);
    }

    Ok(Outcome::new(
        pairs >= 500 && failures.is_empty() && max_rho <= 0.0,
        format!(
            "{pairs} pairs (ρ = −0.3: {}, 0: {}, −0.45: {}, −0.1: {}, 0.5: 0 (no periodic Q has ρ > 0; max ρ over 1000 random Q = {max_rho:.2e})), min slack {worst:.3e}, max ((1+2ρ)/2)W²/Σ̃ = {worst_ratio:.4}{}",
            per_stratum[0],
            per_stratum[1],
            per_stratum[2],
            per_stratum[3],
            if failures.is_empty() { String::new() } else { format!("; violations: {}", failures.join(", ")) }
        ),
    ))
}

fn contraction() -> Result<Outcome> {
    let mut r = rng(8);
    let mut worst = f64::INFINITY;
    let mut total = 0;
    for n in 2..=6 {
        for _ in 0..1000 {
            let u = haar_sample_rng(n, &mut r)?;
            let v = haar_sample_rng(n, &mut r)?;
            let d = geodesic_distance(&u, &v)?;
            let delta = matching_distance(&u.eigenangles(), &v.eigenangles())?;
            worst = worst.min(d - delta);
            total += 1;
        }
    }
    Ok(Outcome::new(
        worst >= -1e-9,
        format!("{total} pairs, N = 2..6, min d − δ = {worst:.3e}"),
    ))
}

fn hessian_transfer() -> Result<Outcome> {
    let q = Potential::cos(64, 0.3);
    let mut r = rng(9);
    let mut parts = Vec::new();
    let mut pass = true;
    for n in [2, 3, 4] {
        let mut min = f64::INFINITY;
        for _ in 0..1000 {
            let u = haar_sample_rng(n, &mut r)?;
            let x = random_tangent(n, &mut r);
            min = min.min(hessian_probe(&q, &u, &x, 1e-3)?.second_difference);
        }
        pass &= min >= -0.3 - 1e-3;
        parts.push(format!("N={n}: {min:.5}"));
    }
    Ok(Outcome::new(
        pass,
        format!(
            "min second difference over 1000 probes, {}",
            parts.join(", ")
        ),
    ))
}

fn pl_hypothesis() -> Result<Outcome> {
    let q = Potential::cos(64, 0.3);
    let rho = measured_rho(&q).rho;
    let g = |t: f64| 0.4 * t.sin() + 0.15 * (2.0 * t).cos() - 0.1 * (3.0 * t).sin();
    let f = QuadraticInfConvolution::new(g, (1.0 + 2.0 * rho) / 4.0);
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, theta) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let rep = pl_hypothesis_check(&q, &f, &g, theta, 3, 1000, 100 + i as u64)?;
        pass &= rep.worst() >= -1e-8;
        parts.push(format!(
            "θ={theta}: worst {:.2e} ({} skipped)",
            rep.worst(),
            rep.skipped
        ));
    }
    Ok(Outcome::new(
        pass,
        format!("N = 3, 1000 trials each, {}", parts.join(", ")),
    ))
}

fn pressure() -> Result<Outcome> {
    let q = Potential::zero(256);
    let f = Potential::cos(256, 1.0);
    let oracle = EquilibriumSolver::default().free_pressure(&q, &f)?;
    let mut points = Vec::new();
    let mut gates = Vec::new();
    let mut pass = true;
    for n in [8, 16, 32] {
        let reps: Vec<PressureEstimate> = [11u64, 23]
            .iter()
            .map(|&seed| {
                pressure_mc(
                    &q,
                    &f,
                    n,
                    ChainConfig::for_samples(n, 4000, 2 * n, seed),
                    11,
                )
            })
            .collect::<Result<_>>()?;
        let (a, b) = (&reps[0], &reps[1]);
        let z =
            (a.estimate - b.estimate).abs() / (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        let rates_ok = reps
            .iter()
            .flat_map(|p| &p.nodes)
            .all(|x| (0.05..=0.95).contains(&x.acceptance_rate));
        pass &= z <= 3.0 && rates_ok;
        let mean = 0.5 * (a.estimate + b.estimate);
        points.push((n, mean));
        gates.push(format!(
            "N={n}: {mean:.5} ± {:.5} (replicates {z:.2} SE apart)",
            0.5 * (a.std_error.hypot(b.std_error))
        ));
    }
    let (limit, slope) = extrapolate_inverse_n(&points);
    let rel = (limit - oracle).abs() / oracle;
    pass &= rel <= 0.05;
    Ok(Outcome::new(
        pass,
        format!(
            "{}; fit a + b/N: a = {limit:.5}, b = {slope:.4}; oracle j_0(cos) = {oracle:.6}, relative error {:.2}%",
            gates.join(", "),
            100.0 * rel
        ),
    ))
}

fn positive_trig(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
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

fn prekopa_leindler() -> Result<Outcome> {
    let n = 256;
    let mut r = rng(12);
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    let mut swapped_failures = 0;
    for _ in 0..100 {
        let f = positive_trig(&mut r, n);
        let g = positive_trig(&mut r, n);
        for theta in [0.25, 0.5, 0.75] {
            let rep = pl_verify_circle(&f, &g, theta)?;
            failures += usize::from(!rep.holds);
            swapped_failures += usize::from(!rep.holds_swapped);
            worst = worst.min(rep.margin);
        }
    }
    Ok(Outcome::new(
        failures == 0,
        format!(
            "300 cases at n = 256, {failures} failures, min margin {worst:.3e} (exchanged exponents: {swapped_failures} failures, not asserted)"
        ),
    ))
}

fn gas_two_point() -> Result<Outcome> {
    let q = Potential::zero(16);
    let (states, stats) = mcmc_sample(&q, 2, ChainConfig::for_samples(2, 100_000, 20, 13))?;
    let bins = 40;
    let mut counts = vec![0usize; bins];
    for s in &states {
        let a = s.angles();
        let gap = (a[0] - a[1]).rem_euclid(TWO_PI);
        counts[((gap / TWO_PI * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let cdf = |g: f64| (g - g.sin()) / TWO_PI;
    let total = states.len() as f64;
    let chi2: f64 = (0..bins)
        .map(|b| {
            let lo = TWO_PI * b as f64 / bins as f64;
            let hi = TWO_PI * (b + 1) as f64 / bins as f64;
            let expected = total * (cdf(hi) - cdf(lo));
            (counts[b] as f64 - expected).powi(2) / expected
        })
        .sum();
    let critical = ChiSquared::new((bins - 1) as f64)
        .unwrap()
        .inverse_cdf(0.99);
    Ok(Outcome::new(
        states.len() == 100_000 && chi2 <= critical,
        format!(
            "{} samples, χ² = {chi2:.2} vs 1% critical {critical:.2} ({} dof), acceptance {:.3}",
            states.len(),
            bins - 1,
            stats.acceptance_rate
        ),
    ))
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion {
            id: 1,
            name: "S_k Taylor coefficients",
            budget: secs(1),
            run: taylor,
        },
        Criterion {
            id: 2,
            name: "Φ_θ quadratic bound sweep",
            budget: secs(10),
            run: phi_bound_sweep,
        },
        Criterion {
            id: 3,
            name: "equilibrium of Q = cos",
            budget: secs(30),
            run: cosine_equilibrium,
        },
        Criterion {
            id: 4,
            name: "circular W2 vs assignment",
            budget: secs(60),
            run: w2_exactness,
        },
        Criterion {
            id: 5,
            name: "Kantorovich duality",
            budget: secs(120),
            run: kantorovich,
        },
        Criterion {
            id: 6,
            name: "entropy variational formula",
            budget: secs(10),
            run: entropy_variational,
        },
        Criterion {
            id: 7,
            name: "free TCI matrix",
            budget: secs(600),
            run: tci_matrix,
        },
        Criterion {
            id: 8,
            name: "δ ≤ d contraction",
            budget: secs(120),
            run: contraction,
        },
        Criterion {
            id: 9,
            name: "Hessian transfer",
            budget: secs(300),
            run: hessian_transfer,
        },
        Criterion {
            id: 10,
            name: "Prékopa–Leindler hypothesis chain",
            budget: secs(300),
            run: pl_hypothesis,
        },
        Criterion {
            id: 11,
            name: "free pressure limit",
            budget: secs(1200),
            run: pressure,
        },
        Criterion {
            id: 12,
            name: "circle Prékopa–Leindler",
            budget: secs(300),
            run: prekopa_leindler,
        },
        Criterion {
            id: 13,
            name: "N = 2 gap distribution",
            budget: secs(300),
            run: gas_two_point,
        },
    ];

    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for c in criteria
        .iter()
        .filter(|c| filter.is_empty() || filter.contains(&c.id))
    {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(o) => (o.pass && elapsed <= c.budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} {:>2} {:<30} {:>8.2}s / {:>4}s  {detail}",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
