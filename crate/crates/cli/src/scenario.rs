//! Scenario files: a potential, a list of measure recipes, a grid, seeds and
//! tolerance overrides.
//!
//! A file holds either one scenario object or `{"scenarios": [...]}`. The
//! `--scenario` argument is a path, or the name of a bundled scenario when no
//! such file exists.

use crate::error::{CliError, CliResult};
use circle_tci::circle::Atom;
use circle_tci::equilibrium::EquilibriumResult;
use circle_tci::{CircleMeasure, Potential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

/// Bundled scenarios, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("null", include_str!("../scenarios/null.json")),
    ("cos-family", include_str!("../scenarios/cos-family.json")),
    ("strata", include_str!("../scenarios/strata.json")),
];

/// Q = q0 + Σ (a_k cos kθ + b_k sin kθ) over `terms = [[k, a_k, b_k], ...]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default)]
    pub q0: f64,
    #[serde(default)]
    pub terms: Vec<(usize, f64, f64)>,
}

impl PotentialSpec {
    pub fn build(&self, grid: usize) -> CliResult<Potential> {
        Ok(Potential::trig(grid, self.q0, &self.terms)?)
    }
}

/// Named measure families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// ν_Q itself.
    Equilibrium,
    Uniform,
    /// Density ∝ exp(κ cos(θ − center)).
    VonMises {
        center: f64,
        kappa: f64,
    },
    /// (1 − eps)ν_Q + eps·VonMises(center, kappa).
    PerturbedEquilibrium {
        eps: f64,
        center: f64,
        kappa: f64,
    },
    /// `count` densities exp(Σ_{m ≤ modes} a_m cos mθ + b_m sin mθ) per seed,
    /// coefficients uniform in [−amplitude, amplitude].
    RandomTrig {
        count: usize,
        modes: usize,
        amplitude: f64,
    },
    Atoms {
        angles: Vec<f64>,
        masses: Vec<f64>,
    },
}

fn von_mises(grid: usize, center: f64, kappa: f64) -> CliResult<CircleMeasure> {
    Ok(CircleMeasure::from_density(grid, move |t: f64| {
        (kappa * (t - center).cos()).exp()
    })?)
}

impl MeasureSpec {
    /// Labelled measures produced by this recipe.
    pub fn resolve(
        &self,
        grid: usize,
        eq: &EquilibriumResult,
        seeds: &[u64],
    ) -> CliResult<Vec<(String, CircleMeasure)>> {
        Ok(match self {
            MeasureSpec::Equilibrium => vec![("equilibrium".into(), eq.nu_q.clone())],
            MeasureSpec::Uniform => vec![("uniform".into(), CircleMeasure::uniform(grid))],
            MeasureSpec::VonMises { center, kappa } => {
                vec![(
                    format!("von_mises(center={center},kappa={kappa})"),
                    von_mises(grid, *center, *kappa)?,
                )]
            }
            MeasureSpec::PerturbedEquilibrium { eps, center, kappa } => {
                if !(0.0..=1.0).contains(eps) {
                    return Err(CliError::Usage(format!(
                        "eps must lie in [0, 1], got {eps}"
                    )));
                }
                let bump = von_mises(grid, *center, *kappa)?;
                vec![(
                    format!("perturbed_equilibrium(eps={eps},center={center},kappa={kappa})"),
                    eq.nu_q.mix(&bump, *eps)?,
                )]
            }
            MeasureSpec::RandomTrig {
                count,
                modes,
                amplitude,
            } => {
                if *amplitude < 0.0 || !amplitude.is_finite() {
                    return Err(CliError::Usage(format!(
                        "amplitude must be finite and ≥ 0, got {amplitude}"
                    )));
                }
                let mut out = Vec::with_capacity(count * seeds.len());
                for &seed in seeds {
                    let mut r = ChaCha8Rng::seed_from_u64(seed);
                    for i in 0..*count {
                        let terms: Vec<(f64, f64, f64)> = (1..=*modes)
                            .map(|m| {
                                let a = r.random_range(-1.0..=1.0) * amplitude;
                                let b = r.random_range(-1.0..=1.0) * amplitude;
                                (m as f64, a, b)
                            })
                            .collect();
                        let mu = CircleMeasure::from_density(grid, move |t: f64| {
                            terms
                                .iter()
                                .map(|&(m, a, b)| a * (m * t).cos() + b * (m * t).sin())
                                .sum::<f64>()
                                .exp()
                        })?;
                        out.push((format!("random_trig(seed={seed},index={i})"), mu));
                    }
                }
                out
            }
            MeasureSpec::Atoms { angles, masses } => {
                if angles.len() != masses.len() {
                    return Err(CliError::Usage(format!(
                        "atoms: {} angles but {} masses",
                        angles.len(),
                        masses.len()
                    )));
                }
                let atoms = angles
                    .iter()
                    .zip(masses)
                    .map(|(&angle, &mass)| Atom { angle, mass })
                    .collect();
                vec![("atoms".into(), CircleMeasure::atomic(atoms)?)]
            }
        })
    }
}

/// Per-check tolerance overrides.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed negative TCI slack.
    #[serde(default)]
    pub tci: Option<f64>,
}

fn default_grid() -> usize {
    256
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub potential: PotentialSpec,
    pub measures: Vec<MeasureSpec>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Claimed convexity constant; defaults to the measured one.
    #[serde(default)]
    pub rho: Option<f64>,
}

impl Scenario {
    fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Usage(format!("scenario {:?}: {m}", self.name)));
        if self.name.is_empty() {
            return Err(CliError::Usage("scenario name must not be empty".into()));
        }
        if self.grid < 8 {
            return bad(format!("grid must be at least 8, got {}", self.grid));
        }
        if self.measures.is_empty() {
            return bad("no measures".into());
        }
        if self.seeds.is_empty() {
            return bad("no seeds".into());
        }
        if let Some(t) = self.tolerances.tci {
            if !(t >= 0.0 && t.is_finite()) {
                return bad(format!("tolerance must be finite and ≥ 0, got {t}"));
            }
        }
        Ok(())
    }

    /// Apply `--grid` and `--seed`.
    pub fn with_overrides(mut self, grid: Option<usize>, seed: Option<u64>) -> Self {
        if let Some(g) = grid {
            self.grid = g;
        }
        if let Some(s) = seed {
            self.seeds = vec![s];
        }
        self
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioList {
    scenarios: Vec<Scenario>,
}

/// Parse scenario JSON, validating each scenario and name uniqueness.
pub fn parse_scenarios(text: &str) -> CliResult<Vec<Scenario>> {
    let malformed = |e: serde_json::Error| CliError::Usage(format!("malformed scenario file: {e}"));
    let value: serde_json::Value = serde_json::from_str(text).map_err(malformed)?;
    let list = if value.get("scenarios").is_some() {
        serde_json::from_value::<ScenarioList>(value)
            .map_err(malformed)?
            .scenarios
    } else {
        vec![serde_json::from_value::<Scenario>(value).map_err(malformed)?]
    };
    if list.is_empty() {
        return Err(CliError::Usage("scenario file lists no scenarios".into()));
    }
    let mut names = HashSet::new();
    for s in &list {
        s.validate()?;
        if !names.insert(s.name.as_str()) {
            return Err(CliError::Usage(format!(
                "duplicate scenario name {:?}",
                s.name
            )));
        }
    }
    Ok(list)
}

/// Read `arg` as a path, falling back to the bundled scenario of that name.
pub fn load_scenarios(arg: &str) -> CliResult<Vec<Scenario>> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path)?;
        return parse_scenarios(&text).map_err(|e| e.context(arg));
    }
    match BUNDLED.iter().find(|(name, _)| *name == arg) {
        Some((_, text)) => parse_scenarios(text),
        None => {
            let names: Vec<&str> = BUNDLED.iter().map(|b| b.0).collect();
            Err(CliError::Usage(format!(
                "no scenario file {arg:?} and no bundled scenario of that name (bundled: {})",
                names.join(", ")
            )))
        }
    }
}

/// Readable form of a potential spec.
pub fn potential_label(spec: &PotentialSpec) -> String {
    let mut parts = vec![format!("{}", spec.q0)];
    for &(k, a, b) in &spec.terms {
        if a != 0.0 {
            parts.push(format!("{a}cos{k}θ"));
        }
        if b != 0.0 {
            parts.push(format!("{b}sin{k}θ"));
        }
    }
    parts.join(" + ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse() {
        for (name, text) in BUNDLED {
            let list = parse_scenarios(text).unwrap();
            assert!(!list.is_empty(), "{name}");
        }
        assert_eq!(load_scenarios("null").unwrap()[0].name, "null");
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse_scenarios("{").is_err());
        assert!(parse_scenarios(r#"{"name": "x", "measures": [{"family": "nope"}]}"#).is_err());
        assert!(parse_scenarios(
            r#"{"name": "x", "measures": [{"family": "uniform"}], "extra": 1}"#
        )
        .is_err());
        let dup = r#"{"scenarios": [
            {"name": "a", "measures": [{"family": "uniform"}]},
            {"name": "a", "measures": [{"family": "uniform"}]}
        ]}"#;
        assert!(parse_scenarios(dup).is_err());
        assert_eq!(
            load_scenarios("no-such-scenario").unwrap_err().exit_code(),
            2
        );
    }

    #[test]
    fn random_trig_is_seeded() {
        let eq = circle_tci::equilibrium::solve_equilibrium(&Potential::zero(32)).unwrap();
        let spec = MeasureSpec::RandomTrig {
            count: 3,
            modes: 2,
            amplitude: 0.5,
        };
        let a = spec.resolve(32, &eq, &[5, 6]).unwrap();
        let b = spec.resolve(32, &eq, &[5, 6]).unwrap();
        assert_eq!(a.len(), 6);
        assert_eq!(a, b);
        assert_ne!(a[0].1, a[3].1);
    }

    #[test]
    fn labels() {
        let spec = PotentialSpec {
            q0: 0.0,
            terms: vec![(1, 0.3, 0.0), (2, 0.0, -0.1)],
        };
        assert_eq!(potential_label(&spec), "0 + 0.3cos1θ + -0.1sin2θ");
    }
}
