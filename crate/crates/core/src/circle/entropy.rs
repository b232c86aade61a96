use super::{CircleMeasure, TOL_MASS};
use crate::{Error, ExtReal, Result};

/// Classical relative entropy S(μ,ν) = Σ μ_j log(μ_j/ν_j), or +∞ when μ is
/// not absolutely continuous with respect to ν.
///
/// A grid measure is read as a density, so an atomic μ against a grid ν is
/// never absolutely continuous, and vice versa. Two atomic measures compare
/// atom by atom at equal angles.
pub fn relative_entropy(mu: &CircleMeasure, nu: &CircleMeasure) -> Result<ExtReal> {
    match (mu, nu) {
        (CircleMeasure::Grid(a), CircleMeasure::Grid(b)) => {
            if a.n_grid() != b.n_grid() {
                return Err(Error::Dimension(a.n_grid(), b.n_grid()));
            }
            let mut s = 0.0;
            for (&m, &v) in a.weights().iter().zip(b.weights()) {
                if m <= 0.0 {
                    continue;
                }
                if v <= 0.0 {
                    if m > TOL_MASS {
                        return Ok(ExtReal::PosInf);
                    }
                    continue;
                }
                s += m * (m / v).ln();
            }
            Ok(ExtReal::Finite(s.max(0.0)))
        }
        (CircleMeasure::Atomic(a), CircleMeasure::Atomic(b)) => {
            let mut s = 0.0;
            for at in a.atoms().iter().filter(|x| x.mass > 0.0) {
                let v: f64 = b
                    .atoms()
                    .iter()
                    .filter(|y| y.angle == at.angle)
                    .map(|y| y.mass)
                    .sum();
                if v <= 0.0 {
                    if at.mass > TOL_MASS {
                        return Ok(ExtReal::PosInf);
                    }
                    continue;
                }
                s += at.mass * (at.mass / v).ln();
            }
            Ok(ExtReal::Finite(s.max(0.0)))
        }
        _ => Ok(ExtReal::PosInf),
    }
}

/// ∫f dμ − log ∫e^f dν for a grid function f; a lower bound for S(μ,ν) with
/// equality at f = log(dμ/dν).
pub fn entropy_dual_value(mu: &CircleMeasure, nu: &CircleMeasure, f: &[f64]) -> Result<f64> {
    let (a, b) = match (mu, nu) {
        (CircleMeasure::Grid(a), CircleMeasure::Grid(b)) => (a.weights(), b.weights()),
        _ => return Err(Error::InvalidMeasure("grid measures required".into())),
    };
    if a.len() != b.len() {
        return Err(Error::Dimension(a.len(), b.len()));
    }
    if a.len() != f.len() {
        return Err(Error::Dimension(a.len(), f.len()));
    }
    if let Some(i) = f.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("f is not finite at {i}")));
    }
    let lin: f64 = a.iter().zip(f).map(|(m, v)| m * v).sum();
    let fmax = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = b.iter().zip(f).map(|(w, v)| w * (v - fmax).exp()).sum();
    Ok(lin - (fmax + z.ln()))
}
