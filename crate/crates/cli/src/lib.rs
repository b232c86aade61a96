//! Command-line harness for the circle-tci laboratory.
//!
//! Every subcommand produces a [`Report`]: a list of named checks with their
//! numbers, rendered as JSON, CSV or a table. Exit codes are 0 when every
//! check passes, 1 when an inequality is violated, 2 for usage or
//! configuration errors and 3 for numeric failures.

pub mod commands;
mod error;
pub mod report;
pub mod scenario;
pub mod suite;

pub use error::{CliError, CliResult};
pub use report::{build_id, Check, Format, Report, Value};

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

/// Seed used when `--seed` is absent.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "circle-tci",
    version,
    about = "Numerical checks of the free transportation cost inequality on the circle"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file, or the name of a bundled scenario (null, cos-family, strata).
    #[arg(long, global = true)]
    pub scenario: Option<String>,
    /// Grid size; overrides scenario grids.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Seed; overrides scenario seeds.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

impl Common {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

/// Q = q0 + Σ (a cos kθ + b sin kθ), one `--term k,a,b` per mode.
#[derive(Debug, Clone, Args)]
pub struct PotentialArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub q0: f64,
    #[arg(long = "term", value_name = "K,A,B", value_parser = parse_term)]
    pub terms: Vec<(usize, f64, f64)>,
}

/// Parse `k,a,b`.
pub fn parse_term(s: &str) -> Result<(usize, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected k,a,b, got {s:?}"));
    }
    let k: usize = parts[0]
        .parse()
        .map_err(|e| format!("mode {:?}: {e}", parts[0]))?;
    if k == 0 {
        return Err("mode index must be ≥ 1".into());
    }
    let a: f64 = parts[1]
        .parse()
        .map_err(|e| format!("coefficient {:?}: {e}", parts[1]))?;
    let b: f64 = parts[2]
        .parse()
        .map_err(|e| format!("coefficient {:?}: {e}", parts[2]))?;
    Ok((k, a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SuiteName {
    Equilibrium,
    Transport,
    Sk,
    Sun,
    Gas,
    Pressure,
    Pl,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Free TCI verdicts over every (scenario, measure) pair.
    Tci,
    /// Equilibrium measure of a potential.
    Equilibrium {
        #[command(flatten)]
        q: PotentialArgs,
        /// Write ν_Q as a measure record (CSV with --format csv, JSON otherwise).
        #[arg(long)]
        measure_out: Option<PathBuf>,
    },
    /// Circular W between two measure files (JSON or CSV records).
    W2 {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
    },
    /// Monte Carlo free pressure against the equilibrium value.
    Pressure {
        #[command(flatten)]
        q: PotentialArgs,
        /// Test function, as `--f-term k,a,b`; defaults to f = cos.
        #[arg(long = "f-term", value_name = "K,A,B", value_parser = parse_term)]
        f_terms: Vec<(usize, f64, f64)>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        f0: f64,
        /// Matrix sizes; two or more add an a + b/N extrapolation.
        #[arg(long = "n", value_delimiter = ',', default_values_t = [8usize])]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Interpolation nodes in s (odd).
        #[arg(long, default_value_t = 11)]
        nodes: usize,
    },
    /// Sample the eigenvalue gas and compare its mean density with ν_Q.
    Gas {
        #[command(flatten)]
        q: PotentialArgs,
        #[arg(long = "n", default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Thinning; defaults to 2N.
        #[arg(long)]
        thin: Option<usize>,
        /// Stream thinned states to this CSV file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Distortion coefficients: c_1 = 1/6, positivity, series accuracy and the Φ_θ bound sweep.
    Sk {
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 16)]
        n_max: usize,
        #[arg(long, default_value_t = 25)]
        d_steps: usize,
        /// Write the full sweep as CSV.
        #[arg(long)]
        sweep_out: Option<PathBuf>,
    },
    /// Brute-force Prékopa–Leindler on the circle for random positive pairs.
    PlCircle {
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 256)]
        points: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75])]
        theta: Vec<f64>,
    },
    /// SU(N) geometry: metric axioms, δ ≤ d and the Hessian lower bound.
    SunCheck {
        #[arg(long = "n", value_delimiter = ',', default_values_t = [2usize, 3, 4, 5, 6])]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        /// Hessian probes use Q = c·cos.
        #[arg(long, default_value_t = 0.3)]
        c: f64,
    },
    /// A module's invariant suite with recorded seeds.
    Suite {
        #[arg(value_enum)]
        name: SuiteName,
    },
}

/// Run a parsed command line.
pub fn run(cli: &Cli) -> CliResult<Report> {
    let c = &cli.common;
    match &cli.command {
        Command::Tci => commands::tci(c),
        Command::Equilibrium { q, measure_out } => {
            commands::equilibrium(c, q, measure_out.as_deref())
        }
        Command::W2 { mu, nu } => commands::w2(mu, nu),
        Command::Pressure {
            q,
            f_terms,
            f0,
            ns,
            samples,
            nodes,
        } => {
            let f_terms = if f_terms.is_empty() && *f0 == 0.0 {
                vec![(1, 1.0, 0.0)]
            } else {
                f_terms.clone()
            };
            commands::pressure(
                c,
                q,
                &PotentialArgs {
                    q0: *f0,
                    terms: f_terms,
                },
                ns,
                *samples,
                *nodes,
            )
        }
        Command::Gas {
            q,
            n,
            samples,
            thin,
            trace,
        } => commands::gas(c, q, *n, *samples, thin.unwrap_or(2 * n), trace.as_deref()),
        Command::Sk {
            alpha,
            n_max,
            d_steps,
            sweep_out,
        } => commands::sk(alpha, *n_max, *d_steps, sweep_out.as_deref()),
        Command::PlCircle {
            pairs,
            points,
            theta,
        } => commands::pl_circle(c.seed(), *pairs, *points, theta),
        Command::SunCheck { ns, pairs, c: amp } => commands::sun_check(c.seed(), ns, *pairs, *amp),
        Command::Suite { name } => suite::run(*name, c),
    }
}

/// Write the report to `--out` or standard output.
pub fn emit(report: &Report, common: &Common) -> CliResult<()> {
    let text = report.render(common.format)?;
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
