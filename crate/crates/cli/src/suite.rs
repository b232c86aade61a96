//! Randomised invariant suites, one per module. Every random draw derives
//! from `--seed`, so a rerun with the same seed reproduces the report byte
//! for byte.

use crate::commands::{pl_circle, sk, sun_check};
use crate::error::CliResult;
use crate::report::{Check, Report};
use crate::scenario::load_scenarios;
use crate::{Common, SuiteName};
use circle_tci::assignment::hungarian;
use circle_tci::circle::{grid_angle, measured_rho, Atom};
use circle_tci::equilibrium::{
    relative_free_entropy, solve_equilibrium, solve_equilibrium_with, weighted_energy,
    EquilibriumSolver, SolverConfig, Stage,
};
use circle_tci::gas::{
    log_weight, mcmc_sample, mean_empirical_grid, pressure_mc, ChainConfig, GasChain,
    PressureEstimate,
};
use circle_tci::sun::pl_hypothesis_check;
use circle_tci::transport::{
    circular_w2, circular_w2_density, kantorovich_dual, tci_check_with, QuadraticInfConvolution,
    TCI_TOLERANCE,
};
use circle_tci::{angular_distance, CircleMeasure, Potential, TWO_PI};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run(name: SuiteName, c: &Common) -> CliResult<Report> {
    let seed = c.seed();
    let (label, mut report) = match name {
        SuiteName::Equilibrium => ("equilibrium", equilibrium(seed, c.grid.unwrap_or(1024))?),
        SuiteName::Transport => ("transport", transport(seed)?),
        SuiteName::Sk => ("sk", sk(&[0.5, 1.0, 2.0], 16, 25, None)?),
        SuiteName::Sun => ("sun", sun_check(seed, &[2, 3, 4, 5, 6], 200, 0.3)?),
        SuiteName::Gas => ("gas", gas(seed)?),
        SuiteName::Pressure => ("pressure", pressure(seed)?),
        SuiteName::Pl => ("pl", pl(seed)?),
    };
    report.command = format!("suite {label}");
    if report.seeds.is_empty() {
        report.seeds = vec![seed];
    }
    Ok(report)
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn random_density(
    r: &mut ChaCha8Rng,
    n: usize,
    modes: usize,
    amp: f64,
) -> CliResult<CircleMeasure> {
    let terms: Vec<(f64, f64, f64)> = (1..=modes)
        .map(|m| {
            (
                m as f64,
                r.random_range(-amp..amp),
                r.random_range(-amp..amp),
            )
        })
        .collect();
    Ok(CircleMeasure::from_density(n, move |t: f64| {
        terms
            .iter()
            .map(|&(m, a, b)| a * (m * t).cos() + b * (m * t).sin())
            .sum::<f64>()
            .exp()
    })?)
}

fn equilibrium(seed: u64, n: usize) -> CliResult<Report> {
    let mut checks = Vec::new();

    let res = solve_equilibrium(&Potential::cos(n, 1.0))?;
    let w = res.nu_q.grid_weights().expect("grid equilibrium");
    let linf = (0..n)
        .map(|j| (w[j] * n as f64 / TWO_PI - (1.0 - grid_angle(j, n).cos()) / TWO_PI).abs())
        .fold(0.0, f64::max);
    let b_err = (res.b_constant - 0.25).abs();
    checks.push(
        Check::new(
            "Q = cos gives density (1 − cos)/2π",
            linf <= 1e-6 && b_err <= 1e-6,
        )
        .with("grid", n)
        .with("linf", linf)
        .with("b_constant", res.b_constant),
    );

    let res = solve_equilibrium(&Potential::zero(128))?;
    let dev = res
        .nu_q
        .grid_weights()
        .expect("grid equilibrium")
        .iter()
        .map(|x| (x - 1.0 / 128.0).abs())
        .fold(0.0, f64::max);
    checks.push(
        Check::new("Q = 0 gives the uniform measure", dev <= 1e-15).with("max_deviation", dev),
    );

    let mut r = rng(seed, 1);
    let mut min_entropy = f64::INFINITY;
    let mut identity: f64 = 0.0;
    for q in [
        Potential::cos(128, 0.3),
        Potential::cos(128, 2.0),
        Potential::trig(128, 0.1, &[(1, 0.4, -0.2), (3, 0.1, 0.05)])?,
    ] {
        let e0 = solve_equilibrium(&q)?.energy;
        for _ in 0..20 {
            let mu = random_density(&mut r, 128, 4, 1.2)?;
            let s = relative_free_entropy(&q, &mu)?.to_f64();
            let e = weighted_energy(&q, &mu)?.to_f64();
            min_entropy = min_entropy.min(s);
            identity = identity.max((s - (e - e0)).abs());
        }
    }
    checks.push(
        Check::new(
            "Σ̃ ≥ 0 and Σ̃ = E_Q(μ) − E_Q(ν_Q)",
            min_entropy >= -1e-8 && identity <= 1e-12,
        )
        .with("measures", 60usize)
        .with("min_free_entropy", min_entropy)
        .with("max_identity_error", identity),
    );

    let mut worst: f64 = 0.0;
    let mut compared = 0usize;
    for _ in 0..5 {
        let q = Potential::trig(
            128,
            0.0,
            &[
                (1, r.random_range(-0.3..0.3), r.random_range(-0.3..0.3)),
                (2, r.random_range(-0.1..0.1), 0.0),
            ],
        )?;
        let spectral = solve_equilibrium(&q)?;
        if spectral.solver_report.stage != Stage::Spectral {
            continue;
        }
        let cfg = SolverConfig {
            force_simplex: true,
            ..SolverConfig::default()
        };
        let simplex = solve_equilibrium_with(&q, &cfg)?;
        let a = spectral.nu_q.grid_weights().expect("grid");
        let b = simplex.nu_q.grid_weights().expect("grid");
        worst = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs() * 128.0 / TWO_PI)
            .fold(worst, f64::max);
        compared += 1;
    }
    checks.push(
        Check::new("spectral and simplex stages agree", worst <= 1e-6)
            .with("potentials", compared)
            .with("max_density_difference", worst),
    );

    let j = EquilibriumSolver::default()
        .free_pressure(&Potential::zero(256), &Potential::cos(256, 1.0))?;
    checks.push(Check::new("j_0(cos) = 1/4", (j - 0.25).abs() <= 1e-12).with("value", j));
    Ok(Report::new("equilibrium", vec![seed], 1e-6, checks))
}

fn transport(seed: u64) -> CliResult<Report> {
    let mut checks = Vec::new();
    let mut r = rng(seed, 2);

    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = r.random_range(1..=32);
        let a: Vec<f64> = (0..n).map(|_| r.random_range(0.0..TWO_PI)).collect();
        let b: Vec<f64> = (0..n).map(|_| r.random_range(0.0..TWO_PI)).collect();
        let cost: Vec<f64> = (0..n * n)
            .map(|k| 0.5 * angular_distance(a[k / n], b[k % n]).powi(2) / n as f64)
            .collect();
        let (oracle, _) = hungarian(&cost, n);
        let (w, _) = circular_w2(
            &CircleMeasure::equal_atoms(&a)?,
            &CircleMeasure::equal_atoms(&b)?,
        )?;
        worst = worst.max((w * w - oracle).abs());
    }
    checks.push(
        Check::new("W² equals the assignment optimum", worst <= 1e-10)
            .with("pairs", 50usize)
            .with("max_error", worst),
    );

    let atoms = |r: &mut ChaCha8Rng| -> CliResult<Vec<Atom>> {
        let k = r.random_range(1..=12);
        let raw: Vec<(f64, f64)> = (0..k)
            .map(|_| (r.random_range(0.0..TWO_PI), r.random_range(0.05..1.0)))
            .collect();
        let total: f64 = raw.iter().map(|x| x.1).sum();
        Ok(raw
            .into_iter()
            .map(|(angle, m)| Atom {
                angle,
                mass: m / total,
            })
            .collect())
    };
    let mut rot: f64 = 0.0;
    let mut duality: f64 = 0.0;
    for i in 0..30 {
        let (a, b) = (atoms(&mut r)?, atoms(&mut r)?);
        let shift = r.random_range(0.0..TWO_PI);
        let turn = |v: &[Atom]| {
            CircleMeasure::atomic(
                v.iter()
                    .map(|x| Atom {
                        angle: (x.angle + shift).rem_euclid(TWO_PI),
                        ..*x
                    })
                    .collect(),
            )
        };
        let (mu, nu) = (
            CircleMeasure::atomic(a.clone())?,
            CircleMeasure::atomic(b.clone())?,
        );
        let w = circular_w2(&mu, &nu)?.0;
        rot = rot.max((w - circular_w2(&turn(&a)?, &turn(&b)?)?.0).abs());
        if i < 10 {
            let rho_prime = [0.2, 1.0, 3.0][i % 3];
            let dual = kantorovich_dual(&mu, &nu, rho_prime)?;
            duality = duality.max((dual.value - rho_prime * w * w).abs());
        }
    }
    checks.push(
        Check::new("W is rotation invariant", rot <= 1e-10)
            .with("pairs", 30usize)
            .with("max_difference", rot),
    );
    checks.push(
        Check::new("Kantorovich dual equals ρ′W²", duality <= 1e-8)
            .with("instances", 10usize)
            .with("max_gap", duality),
    );

    let grid_gap = {
        let mu = CircleMeasure::from_density(512, |t: f64| 1.0 - 0.9 * t.cos())?;
        let nu = CircleMeasure::from_density(512, |t: f64| (0.8 * (t - 2.0).sin()).exp())?;
        let (wa, plan) = circular_w2(&mu, &nu)?;
        let wd = circular_w2_density(&mu, &nu)?;
        ((wa - wd).abs(), plan.discretization_bound)
    };
    checks.push(
        Check::new(
            "atomic and density W within the discretization bound",
            grid_gap.0 <= grid_gap.1,
        )
        .with("difference", grid_gap.0)
        .with("bound", grid_gap.1),
    );

    let scenario = load_scenarios("cos-family")?
        .remove(0)
        .with_overrides(None, Some(seed));
    let q = scenario.potential.build(scenario.grid)?;
    let solver = EquilibriumSolver::default();
    let eq = solver.solve(&q)?;
    let mut min_slack = f64::INFINITY;
    let mut count = 0usize;
    for recipe in &scenario.measures {
        for (_, mu) in recipe.resolve(scenario.grid, &eq, &scenario.seeds)? {
            min_slack = min_slack.min(tci_check_with(&solver, &q, &mu, None)?.slack.to_f64());
            count += 1;
        }
    }
    checks.push(
        Check::new(
            "free TCI on the cos-family scenario",
            min_slack >= -TCI_TOLERANCE,
        )
        .with("rho", measured_rho(&q).rho)
        .with("measures", count)
        .with("min_slack", min_slack),
    );
    Ok(Report::new("transport", vec![seed], 1e-10, checks))
}

/// 99% quantile of χ² with 19 degrees of freedom.
const CHI2_19_99: f64 = 36.191;

fn gas(seed: u64) -> CliResult<Report> {
    let mut checks = Vec::new();

    let q = Potential::cos(32, 0.7);
    let cfg = ChainConfig {
        steps: 20_000,
        burn_in: 1000,
        thin: 7,
        proposal_width: 0.5,
        seed,
    };
    let mut drift: f64 = 0.0;
    for s in GasChain::new(&q, 5, cfg)? {
        drift = drift.max((log_weight(&s.state, &q)? - s.log_weight).abs());
    }
    let (first, _) = mcmc_sample(&q, 5, cfg)?;
    let (second, _) = mcmc_sample(&q, 5, cfg)?;
    checks.push(
        Check::new("tracked log-weight matches full evaluation", drift <= 1e-9)
            .with("N", 5usize)
            .with("max_drift", drift),
    );
    checks
        .push(Check::new("chains are reproducible", first == second).with("samples", first.len()));

    let zero = Potential::zero(16);
    let (states, stats) = mcmc_sample(&zero, 2, ChainConfig::for_samples(2, 20_000, 20, seed))?;
    let bins = 20;
    let mut counts = vec![0usize; bins];
    for s in &states {
        let a = s.angles();
        let gap = (a[0] - a[1]).rem_euclid(TWO_PI);
        counts[((gap / TWO_PI * bins as f64) as usize).min(bins - 1)] += 1;
    }
    // Gap density ∝ sin²(g/2), with CDF (g − sin g)/2π.
    let cdf = |g: f64| (g - g.sin()) / TWO_PI;
    let chi2: f64 = (0..bins)
        .map(|b| {
            let expected = states.len() as f64
                * (cdf(TWO_PI * (b + 1) as f64 / bins as f64)
                    - cdf(TWO_PI * b as f64 / bins as f64));
            (counts[b] as f64 - expected).powi(2) / expected
        })
        .sum();
    checks.push(
        Check::new(
            "N = 2 gap density sin²(g/2)",
            chi2 <= CHI2_19_99 && stats.warning.is_none(),
        )
        .with("samples", states.len())
        .with("chi2", chi2)
        .with("critical_1pct", CHI2_19_99)
        .with("acceptance_rate", stats.acceptance_rate),
    );

    let zero = Potential::zero(256);
    let (states, _) = mcmc_sample(&zero, 16, ChainConfig::for_samples(16, 2000, 16, seed))?;
    let w = circular_w2_density(
        &mean_empirical_grid(&states, 256)?,
        &CircleMeasure::uniform(256),
    )?;
    checks.push(
        Check::new("N = 16 mean density is near uniform", w <= 0.05)
            .with("W", w)
            .with("bound", 0.05),
    );
    Ok(Report::new("gas", vec![seed], 1e-9, checks))
}

fn pressure(seed: u64) -> CliResult<Report> {
    let n = 8;
    let q = Potential::zero(256);
    let f = Potential::cos(256, 1.0);
    let oracle = EquilibriumSolver::default().free_pressure(&q, &f)?;
    let reps: Vec<PressureEstimate> = [seed, seed.wrapping_add(1)]
        .iter()
        .map(|&s| pressure_mc(&q, &f, n, ChainConfig::for_samples(n, 2000, 2 * n, s), 11))
        .collect::<Result<_, _>>()?;
    let (a, b) = (&reps[0], &reps[1]);
    let se = a.std_error.hypot(b.std_error);
    let z = (a.estimate - b.estimate).abs() / se;
    let tuned = reps
        .iter()
        .flat_map(|p| &p.nodes)
        .all(|x| x.warning.is_none());
    let mean = 0.5 * (a.estimate + b.estimate);
    let rel = (mean - oracle).abs() / oracle;
    let checks = vec![
        Check::new("replicate chains agree within 3 SE", z <= 3.0 && tuned)
            .with("N", n)
            .with("estimate_a", a.estimate)
            .with("estimate_b", b.estimate)
            .with("z", z),
        Check::new("N = 8 estimate within 5% of j_0(cos)", rel <= 0.05)
            .with("mean", mean)
            .with("oracle", oracle)
            .with("relative_error", rel),
    ];
    Ok(Report::new(
        "pressure",
        vec![seed, seed.wrapping_add(1)],
        0.05,
        checks,
    ))
}

fn pl(seed: u64) -> CliResult<Report> {
    let mut report = pl_circle(seed, 20, 128, &[0.25, 0.5, 0.75])?;
    let q = Potential::cos(64, 0.3);
    let rho = measured_rho(&q).rho;
    let g = |t: f64| 0.4 * t.sin() + 0.15 * (2.0 * t).cos() - 0.1 * (3.0 * t).sin();
    let f = QuadraticInfConvolution::new(g, (1.0 + 2.0 * rho) / 4.0);
    for (i, theta) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let rep = pl_hypothesis_check(&q, &f, &g, theta, 3, 200, seed.wrapping_add(i as u64))?;
        report.checks.push(
            Check::new(
                format!("free hypothesis chain θ={theta}"),
                rep.worst() >= -1e-8,
            )
            .with("N", 3usize)
            .with("trials", rep.trials)
            .with("skipped", rep.skipped)
            .with("worst_margin", rep.worst()),
        );
    }
    report.passed = report.checks.iter().all(|c| c.passed);
    Ok(report)
}
