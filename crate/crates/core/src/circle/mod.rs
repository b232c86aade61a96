//! Measures and potentials on the unit circle 𝕋 = {e^{iθ}}.
//!
//! Grid objects live on the uniform angular grid θ_j = 2πj/n. Fourier
//! conventions: μ̂_k = ∫e^{−ikθ}dμ for measures and
//! Q(θ) = q_0 + 2·Re Σ_{k≥1} q_k e^{ikθ} for potentials.

mod entropy;
mod io;
mod measure;
mod potential;
pub(crate) mod spectral;

pub use entropy::{entropy_dual_value, relative_entropy};
pub use io::{Record, RecordKind};
pub use measure::{Atom, AtomicMeasure, CircleMeasure, GridDensity};
pub use potential::{measured_rho, ConvexityParameter, Potential};
pub use spectral::{fourier_coefficients, log_energy, log_energy_default};

pub use std::f64::consts::PI;
pub const TWO_PI: f64 = 2.0 * PI;

/// Mass below which a grid cell counts as empty for absolute continuity.
pub const TOL_MASS: f64 = 1e-14;

/// Tolerance on total mass of a probability measure.
pub const TOL_NORMALIZATION: f64 = 1e-12;

/// A real function on the circle, parametrised by angle.
pub trait CircleFunction {
    fn eval(&self, theta: f64) -> f64;
}

impl<F: Fn(f64) -> f64> CircleFunction for F {
    fn eval(&self, theta: f64) -> f64 {
        self(theta)
    }
}

/// θ_j = 2πj/n.
#[inline]
pub fn grid_angle(j: usize, n: usize) -> f64 {
    TWO_PI * j as f64 / n as f64
}

/// Reduce an angle to [0, 2π).
#[inline]
pub fn wrap_positive(theta: f64) -> f64 {
    let t = theta.rem_euclid(TWO_PI);
    if t >= TWO_PI {
        0.0
    } else {
        t
    }
}

/// Reduce an angle to (−π, π].
#[inline]
pub fn wrap_signed(theta: f64) -> f64 {
    let t = wrap_positive(theta);
    if t > PI {
        t - TWO_PI
    } else {
        t
    }
}

/// Geodesic (angular) distance min(|a−b|, 2π−|a−b|) on the unit circle.
#[inline]
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let t = (a - b).rem_euclid(TWO_PI);
    t.min(TWO_PI - t)
}
