use super::spectral::GridFft;
use super::{grid_angle, CircleFunction, Record, PI, TWO_PI};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::hash::{Hash, Hasher};

/// A real confining potential Q on the circle.
///
/// Stored both as grid values at θ_j = 2πj/n and as a truncated Fourier
/// series Q(θ) ≈ q_0 + 2·Re Σ_{k=1}^{K} q_k e^{ikθ}. The largest deviation of
/// the series from the grid values is kept in `truncation_error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Record", try_from = "Record")]
pub struct Potential {
    grid_values: Vec<f64>,
    q0: f64,
    modes: Vec<Complex64>,
    truncation_error: f64,
}

impl Potential {
    /// Potential given by Fourier coefficients; requires K < n/2.
    pub fn from_fourier(n_grid: usize, q0: f64, modes: Vec<Complex64>) -> Result<Self> {
        if n_grid < 4 {
            return Err(Error::InvalidPotential(format!(
                "grid of size {n_grid} too small"
            )));
        }
        if 2 * modes.len() >= n_grid {
            return Err(Error::InvalidPotential(format!(
                "{} modes do not fit a grid of {n_grid} points",
                modes.len()
            )));
        }
        if !q0.is_finite() || modes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidPotential("non-finite coefficient".into()));
        }
        let mut modes = modes;
        while modes.last().is_some_and(|c| c.norm() == 0.0) {
            modes.pop();
        }
        let osc = GridFft::new(n_grid).synthesize_real(&modes);
        let grid_values = osc.into_iter().map(|v| q0 + v).collect();
        Ok(Potential {
            grid_values,
            q0,
            modes,
            truncation_error: 0.0,
        })
    }

    /// Potential given by its values on the uniform grid. The Fourier series
    /// keeps modes 1..n/2−1; negligible trailing modes are dropped.
    pub fn from_grid(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 4 {
            return Err(Error::InvalidPotential(format!(
                "grid of size {n} too small"
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential(format!("non-finite value at {i}")));
        }
        let fft = GridFft::new(n);
        let spec = fft.forward_real(&values);
        let scale = 1.0 / n as f64;
        let q0 = spec[0].re * scale;
        let mut modes: Vec<Complex64> = (1..n.div_ceil(2)).map(|k| spec[k] * scale).collect();
        let peak = modes.iter().map(|c| c.norm()).fold(q0.abs(), f64::max);
        while modes
            .last()
            .is_some_and(|c| c.norm() <= 1e-15 * peak.max(1.0))
        {
            modes.pop();
        }
        let recon = fft.synthesize_real(&modes);
        let truncation_error = recon
            .iter()
            .zip(&values)
            .map(|(r, v)| (q0 + r - v).abs())
            .fold(0.0, f64::max);
        Ok(Potential {
            grid_values: values,
            q0,
            modes,
            truncation_error,
        })
    }

    pub fn zero(n_grid: usize) -> Self {
        Self::from_fourier(n_grid, 0.0, vec![]).expect("valid zero potential")
    }

    /// Q(θ) = c·cos θ.
    pub fn cos(n_grid: usize, c: f64) -> Self {
        Self::from_fourier(n_grid, 0.0, vec![Complex64::new(c / 2.0, 0.0)])
            .expect("valid cosine potential")
    }

    /// Q(θ) = q0 + Σ (a_k cos kθ + b_k sin kθ) over the listed `(k, a_k, b_k)`.
    pub fn trig(n_grid: usize, q0: f64, terms: &[(usize, f64, f64)]) -> Result<Self> {
        let k_max = terms.iter().map(|t| t.0).max().unwrap_or(0);
        let mut modes = vec![Complex64::new(0.0, 0.0); k_max];
        for &(k, a, b) in terms {
            if k == 0 {
                return Err(Error::InvalidPotential("mode index must be ≥ 1".into()));
            }
            modes[k - 1] += Complex64::new(a / 2.0, -b / 2.0);
        }
        Self::from_fourier(n_grid, q0, modes)
    }

    pub fn n_grid(&self) -> usize {
        self.grid_values.len()
    }

    pub fn grid_values(&self) -> &[f64] {
        &self.grid_values
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    /// q_1, …, q_K.
    pub fn modes(&self) -> &[Complex64] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn truncation_error(&self) -> f64 {
        self.truncation_error
    }

    /// p-th derivative of the Fourier series at θ (p = 0 is the value).
    pub fn derivative(&self, theta: f64, p: u32) -> f64 {
        let osc: f64 = self
            .modes
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let k = (i + 1) as f64;
                let factor = Complex64::new(0.0, k).powu(p);
                2.0 * (q * factor * Complex64::from_polar(1.0, k * theta)).re
            })
            .sum();
        if p == 0 {
            self.q0 + osc
        } else {
            osc
        }
    }

    pub fn value_at(&self, theta: f64) -> f64 {
        self.derivative(theta, 0)
    }

    /// Q − other, on the same grid.
    pub fn sub(&self, other: &Potential) -> Result<Potential> {
        self.combine(other, 1.0, -1.0)
    }

    /// a·self + b·other.
    pub fn combine(&self, other: &Potential, a: f64, b: f64) -> Result<Potential> {
        if self.n_grid() != other.n_grid() {
            return Err(Error::Dimension(self.n_grid(), other.n_grid()));
        }
        let len = self.modes.len().max(other.modes.len());
        let zero = Complex64::new(0.0, 0.0);
        let mut modes: Vec<Complex64> = (0..len)
            .map(|i| {
                a * self.modes.get(i).copied().unwrap_or(zero)
                    + b * other.modes.get(i).copied().unwrap_or(zero)
            })
            .collect();
        while modes.last().is_some_and(|c| c.norm() == 0.0) {
            modes.pop();
        }
        Ok(Potential {
            grid_values: self
                .grid_values
                .iter()
                .zip(&other.grid_values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            q0: a * self.q0 + b * other.q0,
            modes,
            truncation_error: a.abs() * self.truncation_error + b.abs() * other.truncation_error,
        })
    }

    pub fn scale(&self, c: f64) -> Potential {
        Potential {
            grid_values: self.grid_values.iter().map(|v| c * v).collect(),
            q0: c * self.q0,
            modes: self.modes.iter().map(|q| q * c).collect(),
            truncation_error: c.abs() * self.truncation_error,
        }
    }

    /// Hash of the grid values; equal potentials share a fingerprint.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.grid_values.len().hash(&mut h);
        for v in &self.grid_values {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

impl CircleFunction for Potential {
    fn eval(&self, theta: f64) -> f64 {
        self.value_at(theta)
    }
}

/// The constant ρ of the convexity hypothesis: the largest ρ with
/// Q(e^{it}) − (ρ/2)t² convex on ℝ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityParameter {
    pub rho: f64,
    pub admissible: bool,
}

impl ConvexityParameter {
    pub fn new(rho: f64) -> Self {
        ConvexityParameter {
            rho,
            admissible: rho > -0.5,
        }
    }

    /// The constant (1+2ρ)/2 multiplying W² in the free TCI.
    pub fn tci_factor(&self) -> f64 {
        (1.0 + 2.0 * self.rho) / 2.0
    }
}

/// ρ = min_t Q''(t), from the analytic second derivative of the Fourier
/// series.
///
/// Q'' has zero mean over a period, so ρ ≤ 0 for every potential, with
/// equality only for constant Q. Periodicity also makes the one-period
/// minimum the minimum over ℝ.
pub fn measured_rho(q: &Potential) -> ConvexityParameter {
    if q.n_modes() == 0 {
        return ConvexityParameter::new(0.0);
    }
    let samples = (64 * q.n_modes()).max(512);
    let mut vals: Vec<(f64, f64)> = (0..samples)
        .map(|j| {
            let t = grid_angle(j, samples);
            (t, q.derivative(t, 2))
        })
        .collect();
    let mut best = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    vals.sort_by(|a, b| a.1.total_cmp(&b.1));
    // Newton on Q''' = 0 from the lowest samples.
    for &(t0, _) in vals.iter().take(8) {
        let mut t = t0;
        for _ in 0..30 {
            let d3 = q.derivative(t, 3);
            let d4 = q.derivative(t, 4);
            if d4 <= 0.0 {
                break;
            }
            let step = d3 / d4;
            t -= step.clamp(-PI / samples as f64, PI / samples as f64);
            if step.abs() < 1e-15 {
                break;
            }
        }
        best = best.min(q.derivative(t.rem_euclid(TWO_PI), 2));
    }
    ConvexityParameter::new(best)
}
