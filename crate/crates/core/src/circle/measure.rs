use super::Record;
use super::{grid_angle, wrap_positive, CircleFunction, TOL_NORMALIZATION, TWO_PI};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Point mass on the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub angle: f64,
    pub mass: f64,
}

/// Masses at the grid angles θ_j = 2πj/n.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    weights: Vec<f64>,
}

impl GridDensity {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_grid(&self) -> usize {
        self.weights.len()
    }

    /// Density values w_j·n/2π with respect to dθ.
    pub fn density_values(&self) -> Vec<f64> {
        let scale = self.weights.len() as f64 / TWO_PI;
        self.weights.iter().map(|w| w * scale).collect()
    }
}

/// Finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }
}

/// A probability measure on the unit circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Record", try_from = "Record")]
pub enum CircleMeasure {
    Grid(GridDensity),
    Atomic(AtomicMeasure),
}

fn check_masses<'a>(masses: impl Iterator<Item = &'a f64>) -> Result<()> {
    let mut total = 0.0;
    for (i, &m) in masses.enumerate() {
        if !m.is_finite() {
            return Err(Error::InvalidMeasure(format!(
                "non-finite mass at {i}: {m}"
            )));
        }
        if m < 0.0 {
            return Err(Error::InvalidMeasure(format!("negative mass at {i}: {m}")));
        }
        total += m;
    }
    if (total - 1.0).abs() > TOL_NORMALIZATION {
        return Err(Error::InvalidMeasure(format!(
            "total mass {total} is not 1"
        )));
    }
    Ok(())
}

impl CircleMeasure {
    /// Grid measure from masses that already sum to one.
    pub fn grid(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("empty grid".into()));
        }
        check_masses(weights.iter())?;
        Ok(CircleMeasure::Grid(GridDensity { weights }))
    }

    /// Grid measure from nonnegative masses, rescaled to total mass one.
    pub fn grid_normalized(mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidMeasure(format!(
                "cannot normalize total mass {total}"
            )));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::grid(weights)
    }

    /// Discretise a nonnegative density on the n-point grid.
    pub fn from_density(n: usize, density: impl CircleFunction) -> Result<Self> {
        let w = (0..n).map(|j| density.eval(grid_angle(j, n))).collect();
        Self::grid_normalized(w)
    }

    pub fn uniform(n: usize) -> Self {
        CircleMeasure::Grid(GridDensity {
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn atomic(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        for a in &atoms {
            if !(a.angle >= 0.0 && a.angle < TWO_PI) {
                return Err(Error::InvalidMeasure(format!(
                    "atom angle {} outside [0, 2π)",
                    a.angle
                )));
            }
        }
        check_masses(atoms.iter().map(|a| &a.mass))?;
        Ok(CircleMeasure::Atomic(AtomicMeasure { atoms }))
    }

    /// Atoms at arbitrary angles (wrapped into [0, 2π)) with equal masses.
    pub fn equal_atoms(angles: &[f64]) -> Result<Self> {
        let m = 1.0 / angles.len() as f64;
        Self::atomic(
            angles
                .iter()
                .map(|&a| Atom {
                    angle: wrap_positive(a),
                    mass: m,
                })
                .collect(),
        )
    }

    pub fn dirac(angle: f64) -> Self {
        CircleMeasure::Atomic(AtomicMeasure {
            atoms: vec![Atom {
                angle: wrap_positive(angle),
                mass: 1.0,
            }],
        })
    }

    pub fn n_grid(&self) -> Option<usize> {
        match self {
            CircleMeasure::Grid(g) => Some(g.n_grid()),
            CircleMeasure::Atomic(_) => None,
        }
    }

    pub fn as_grid(&self) -> Option<&GridDensity> {
        match self {
            CircleMeasure::Grid(g) => Some(g),
            CircleMeasure::Atomic(_) => None,
        }
    }

    pub fn grid_weights(&self) -> Option<&[f64]> {
        self.as_grid().map(GridDensity::weights)
    }

    /// Atom list; grid masses become atoms at the cell centres θ_j.
    pub fn to_atoms(&self) -> Vec<Atom> {
        match self {
            CircleMeasure::Grid(g) => {
                let n = g.n_grid();
                g.weights
                    .iter()
                    .enumerate()
                    .map(|(j, &mass)| Atom {
                        angle: grid_angle(j, n),
                        mass,
                    })
                    .collect()
            }
            CircleMeasure::Atomic(a) => a.atoms.clone(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            CircleMeasure::Grid(g) => g.weights.iter().sum(),
            CircleMeasure::Atomic(a) => a.atoms.iter().map(|a| a.mass).sum(),
        }
    }

    /// ∫ f dμ.
    pub fn integrate(&self, f: &impl CircleFunction) -> f64 {
        self.to_atoms()
            .iter()
            .map(|a| a.mass * f.eval(a.angle))
            .sum()
    }

    /// ∫ f dμ for f given by its grid values.
    pub fn integrate_grid(&self, values: &[f64]) -> Result<f64> {
        let w = self
            .grid_weights()
            .ok_or_else(|| Error::InvalidMeasure("grid measure required".into()))?;
        if w.len() != values.len() {
            return Err(Error::Dimension(w.len(), values.len()));
        }
        Ok(w.iter().zip(values).map(|(a, b)| a * b).sum())
    }

    /// (1−t)·self + t·other for grid measures on the same grid.
    pub fn mix(&self, other: &CircleMeasure, t: f64) -> Result<CircleMeasure> {
        match (self, other) {
            (CircleMeasure::Grid(a), CircleMeasure::Grid(b)) => {
                if a.n_grid() != b.n_grid() {
                    return Err(Error::Dimension(a.n_grid(), b.n_grid()));
                }
                let w = a
                    .weights
                    .iter()
                    .zip(&b.weights)
                    .map(|(x, y)| (1.0 - t) * x + t * y)
                    .collect();
                CircleMeasure::grid_normalized(w)
            }
            _ => {
                let mut atoms: Vec<Atom> = self
                    .to_atoms()
                    .into_iter()
                    .map(|a| Atom {
                        mass: (1.0 - t) * a.mass,
                        ..a
                    })
                    .collect();
                atoms.extend(other.to_atoms().into_iter().map(|a| Atom {
                    mass: t * a.mass,
                    ..a
                }));
                atoms.retain(|a| a.mass > 0.0);
                CircleMeasure::atomic(atoms)
            }
        }
    }
}
