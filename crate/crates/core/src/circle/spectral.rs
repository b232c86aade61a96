use super::CircleMeasure;
use crate::ExtReal;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Forward/inverse FFT pair for a fixed grid size.
#[derive(Clone)]
pub(crate) struct GridFft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl GridFft {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        GridFft {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// X_k = Σ_j x_j e^{−2πijk/n}.
    pub(crate) fn forward_real(&self, x: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(x.len(), self.n);
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// x_j = Σ_k X_k e^{+2πijk/n} (unnormalised).
    pub(crate) fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
        debug_assert_eq!(spectrum.len(), self.n);
        self.inverse.process(&mut spectrum);
        spectrum
    }

    /// 2·Re Σ_{k=1}^{K} c_k e^{ikθ_j} on the grid, where `coeffs[k-1] = c_k`
    /// and K ≤ n/2.
    pub(crate) fn synthesize_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut spec = vec![Complex64::new(0.0, 0.0); self.n];
        for (k, c) in coeffs.iter().enumerate() {
            spec[k + 1] = *c;
        }
        self.inverse(spec).into_iter().map(|z| 2.0 * z.re).collect()
    }
}

/// Fourier coefficients μ̂_k = ∫e^{−ikθ}dμ for k = 1..=K.
///
/// Grid measures use the exact finite sum (periodic in k with period n);
/// atomic measures sum over atoms.
pub fn fourier_coefficients(mu: &CircleMeasure, k_max: usize) -> Vec<Complex64> {
    match mu {
        CircleMeasure::Grid(g) => {
            let n = g.n_grid();
            let spec = GridFft::new(n).forward_real(g.weights());
            (1..=k_max).map(|k| spec[k % n]).collect()
        }
        CircleMeasure::Atomic(a) => (1..=k_max)
            .map(|k| {
                a.atoms()
                    .iter()
                    .map(|at| Complex64::from_polar(at.mass, -(k as f64) * at.angle))
                    .sum()
            })
            .collect(),
    }
}

/// Logarithmic energy Σ(μ) = ∬ log|ζ−η| dμ(ζ)dμ(η), evaluated through the
/// series −Σ_{k=1}^{K} |μ̂_k|²/k.
///
/// Atomic measures have infinite self-energy and return `NegInf`.
pub fn log_energy(mu: &CircleMeasure, k_max: usize) -> ExtReal {
    match mu {
        CircleMeasure::Atomic(_) => ExtReal::NegInf,
        CircleMeasure::Grid(_) => ExtReal::Finite(
            -fourier_coefficients(mu, k_max)
                .iter()
                .enumerate()
                .map(|(i, c)| c.norm_sqr() / (i + 1) as f64)
                .sum::<f64>(),
        ),
    }
}

/// [`log_energy`] with the default truncation K = n/2.
pub fn log_energy_default(mu: &CircleMeasure) -> ExtReal {
    match mu.n_grid() {
        Some(n) => log_energy(mu, n / 2),
        None => ExtReal::NegInf,
    }
}
