use super::{CMatrix, EigenAngles, SpecialUnitary};
use crate::assignment::{brute_force_assignment, hungarian};
use crate::circle::{angular_distance, TWO_PI};
use crate::{Error, Result};
use num_complex::Complex64;

/// Eigen-decomposition of U*V with the minimising logarithm.
#[derive(Debug, Clone)]
pub struct GeodesicLog {
    /// Unitary eigenvectors of U*V, by column.
    pub vectors: CMatrix,
    /// Adjusted angles ψ_j with Σψ_j = 0 and Σψ_j² minimal.
    pub psi: Vec<f64>,
    /// Whether a second shift pattern attains the same Σψ².
    pub ambiguous: bool,
}

impl GeodesicLog {
    pub fn distance(&self) -> f64 {
        self.psi.iter().map(|p| p * p).sum::<f64>().sqrt()
    }
}

/// Minimise Σ(φ_j + 2πm_j)² subject to Σ(φ_j + 2πm_j) = 0.
///
/// The problem is separable and convex in the integer shifts, so moving the
/// required number of whole turns one at a time from the cheapest angle is
/// exact: subtract 2π from the largest angles or add it to the smallest.
fn shift_angles(phi: &[f64]) -> (Vec<f64>, bool) {
    let n = phi.len();
    let turns = (phi.iter().sum::<f64>() / TWO_PI).round() as i64;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| phi[b].total_cmp(&phi[a]));
    let mut psi = phi.to_vec();
    if turns > 0 {
        for &j in order.iter().take(turns as usize) {
            psi[j] -= TWO_PI;
        }
    } else {
        for &j in order.iter().rev().take((-turns) as usize) {
            psi[j] += TWO_PI;
        }
    }
    let hi = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = psi.iter().copied().fold(f64::INFINITY, f64::min);
    (psi, hi - lo >= TWO_PI - 1e-9)
}

/// Exhaustive search over shifts |m_j| ≤ N; returns the minimal Σψ².
pub fn branch_shift_bruteforce(phi: &[f64]) -> f64 {
    let n = phi.len();
    let bound = n as i64;
    let mut m = vec![-bound; n];
    let mut best = f64::INFINITY;
    loop {
        if m.iter().sum::<i64>() == -((phi.iter().sum::<f64>() / TWO_PI).round() as i64) {
            let s: f64 = phi
                .iter()
                .zip(&m)
                .map(|(p, &k)| (p + TWO_PI * k as f64).powi(2))
                .sum();
            best = best.min(s);
        }
        let mut i = 0;
        while i < n {
            m[i] += 1;
            if m[i] <= bound {
                break;
            }
            m[i] = -bound;
            i += 1;
        }
        if i == n {
            return best;
        }
    }
}

/// The minimising logarithm of U*V.
pub fn geodesic_log(u: &SpecialUnitary, v: &SpecialUnitary) -> Result<GeodesicLog> {
    if u.n() != v.n() {
        return Err(Error::Dimension(u.n(), v.n()));
    }
    let m = u.matrix().adjoint() * v.matrix();
    let (vectors, phi) = super::unitary_eigen(&m);
    let (psi, ambiguous) = shift_angles(&phi);
    Ok(GeodesicLog {
        vectors,
        psi,
        ambiguous,
    })
}

/// Riemannian distance d(U,V) = (Σψ_j²)^{1/2}.
pub fn geodesic_distance(u: &SpecialUnitary, v: &SpecialUnitary) -> Result<f64> {
    Ok(geodesic_log(u, v)?.distance())
}

/// W = U·exp(tX) on the minimising geodesic, so d(U,W) = t·d(U,V).
pub fn geodesic_point(u: &SpecialUnitary, v: &SpecialUnitary, t: f64) -> Result<SpecialUnitary> {
    let log = geodesic_log(u, v)?;
    if log.ambiguous {
        return Err(Error::Ambiguous(format!(
            "U and V are on each other's cut locus; candidate angles {:?}",
            log.psi
        )));
    }
    let n = u.n();
    let mut scaled = log.vectors.clone();
    for j in 0..n {
        let phase = Complex64::from_polar(1.0, t * log.psi[j]);
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    let step = scaled * log.vectors.adjoint();
    Ok(SpecialUnitary::from_matrix_unchecked(u.matrix() * step))
}

/// δ(a,b) = min_σ (Σ d(a_i, b_σ(i))²)^{1/2}.
pub fn matching_distance(a: &EigenAngles, b: &EigenAngles) -> Result<f64> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::Dimension(n, b.len()));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let cost: Vec<f64> = (0..n * n)
        .map(|k| angular_distance(a.angles()[k / n], b.angles()[k % n]).powi(2))
        .collect();
    let (best, _) = if n <= 8 {
        brute_force_assignment(&cost, n)
    } else {
        hungarian(&cost, n)
    };
    Ok(best.max(0.0).sqrt())
}
