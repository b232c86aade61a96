use super::w2::{circular_w2, circular_w2_density};
use crate::circle::{measured_rho, CircleMeasure, ConvexityParameter, Potential};
use crate::equilibrium::EquilibriumSolver;
use crate::{Error, ExtReal, Result};
use serde::Serialize;

/// Absolute tolerance on the TCI slack.
pub const TCI_TOLERANCE: f64 = 1e-7;

/// Outcome of comparing ((1+2ρ)/2)·W(μ,ν_Q)² with Σ̃_Q(μ).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TciVerdict {
    pub rho: ConvexityParameter,
    pub wasserstein: f64,
    pub free_entropy: ExtReal,
    /// Σ̃_Q(μ) − ((1+2ρ)/2)·W².
    pub slack: ExtReal,
    pub tolerance: f64,
    pub holds: bool,
}

/// TCI verdict with ρ measured from Q.
pub fn tci_check(q: &Potential, mu: &CircleMeasure) -> Result<TciVerdict> {
    tci_check_with(&EquilibriumSolver::default(), q, mu, None)
}

/// TCI verdict using a shared solver cache. `rho` overrides the measured
/// convexity constant and must not exceed it.
pub fn tci_check_with(
    solver: &EquilibriumSolver,
    q: &Potential,
    mu: &CircleMeasure,
    rho: Option<f64>,
) -> Result<TciVerdict> {
    let measured = measured_rho(q);
    let rho = match rho {
        Some(r) if r > measured.rho + 1e-12 => {
            return Err(Error::Precondition(format!(
                "claimed rho {r} exceeds measured rho {}",
                measured.rho
            )))
        }
        Some(r) => ConvexityParameter::new(r),
        None => measured,
    };
    if !rho.admissible {
        return Err(Error::HypothesisViolation { rho: rho.rho });
    }
    let eq = solver.solve(q)?;
    // Σ̃ reads a grid measure as a density, so W must too.
    let w = match mu.n_grid() {
        Some(_) => circular_w2_density(mu, &eq.nu_q)?,
        None => circular_w2(mu, &eq.nu_q)?.0,
    };
    let free_entropy = solver.relative_free_entropy(q, mu)?;
    let slack = free_entropy.add_finite(-rho.tci_factor() * w * w);
    Ok(TciVerdict {
        rho,
        wasserstein: w,
        free_entropy,
        slack,
        tolerance: TCI_TOLERANCE,
        holds: slack.ge(-TCI_TOLERANCE),
    })
}
