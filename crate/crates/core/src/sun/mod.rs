//! SU(N) with the bi-invariant metric ⟨X,Y⟩ = Re Tr(X*Y) on traceless
//! anti-Hermitian tangent vectors. With this normalisation Ric = (N/2)·g.

mod geodesic;
mod probe;

pub use geodesic::{
    branch_shift_bruteforce, geodesic_distance, geodesic_log, geodesic_point, matching_distance,
    GeodesicLog,
};
pub use probe::{
    hessian_probe, pl_hypothesis_check, random_tangent, trace_function, trace_potential_series,
    HessianProbe, PlHypothesisReport, PlTrial,
};

use crate::circle::{wrap_signed, TWO_PI};
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Tolerance on unitarity and det = 1.
pub const TOL_GROUP: f64 = 1e-10;

pub type CMatrix = DMatrix<Complex64>;

/// An element of SU(N), N ≥ 2.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecialUnitary {
    m: CMatrix,
}

impl SpecialUnitary {
    /// Validate U*U = I and det U = 1.
    pub fn new(m: CMatrix) -> Result<Self> {
        let n = m.nrows();
        if n < 2 || m.ncols() != n {
            return Err(Error::Dimension(n, m.ncols()));
        }
        let defect = (m.adjoint() * &m - CMatrix::identity(n, n)).norm();
        if defect > TOL_GROUP {
            return Err(Error::Constraint(format!(
                "not unitary: ‖U*U − I‖ = {defect:e}"
            )));
        }
        let det = m.determinant();
        if (det - Complex64::new(1.0, 0.0)).norm() > TOL_GROUP {
            return Err(Error::Constraint(format!("det U = {det} is not 1")));
        }
        Ok(SpecialUnitary { m })
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        SpecialUnitary { m }
    }

    pub fn identity(n: usize) -> Self {
        SpecialUnitary {
            m: CMatrix::identity(n, n),
        }
    }

    /// diag(e^{iθ_j}); the angles must sum to a multiple of 2π.
    pub fn from_angles(angles: &[f64]) -> Result<Self> {
        let diag: Vec<Complex64> = angles
            .iter()
            .map(|&a| Complex64::from_polar(1.0, a))
            .collect();
        SpecialUnitary::new(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn adjoint(&self) -> SpecialUnitary {
        SpecialUnitary {
            m: self.m.adjoint(),
        }
    }

    pub fn mul(&self, other: &SpecialUnitary) -> SpecialUnitary {
        SpecialUnitary {
            m: &self.m * &other.m,
        }
    }

    /// Eigenvalue angles λ(U).
    pub fn eigenangles(&self) -> EigenAngles {
        EigenAngles::new(unitary_eigen(&self.m).1)
    }
}

/// Eigenvalue angles in (−π, π], sorted ascending (counterclockwise from −π).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EigenAngles {
    angles: Vec<f64>,
}

impl EigenAngles {
    pub fn new(mut angles: Vec<f64>) -> Self {
        for a in angles.iter_mut() {
            *a = wrap_signed(*a);
        }
        angles.sort_by(f64::total_cmp);
        EigenAngles { angles }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Σ angles / 2π rounded; det = 1 makes the sum an integer multiple.
    pub fn winding(&self) -> i64 {
        (self.angles.iter().sum::<f64>() / TWO_PI).round() as i64
    }
}

/// Schur vectors and eigenvalue angles of a (numerically) unitary matrix.
///
/// The unbounded Schur iteration can stall on matrices within rounding of a
/// multiple of the identity, so convergence is capped and the tolerance
/// relaxed step by step.
pub(crate) fn unitary_eigen(m: &CMatrix) -> (CMatrix, Vec<f64>) {
    let n = m.nrows();
    for eps in [f64::EPSILON, 1e-14, 1e-13, 1e-12, 1e-11] {
        if let Some(s) = nalgebra::Schur::try_new(m.clone(), eps, 2000) {
            let (q, t) = s.unpack();
            return (q, (0..n).map(|j| t[(j, j)].arg()).collect());
        }
    }
    // Shifting by a random-looking multiple of the identity changes the
    // iteration without changing the Schur vectors.
    let shift = Complex64::new(0.37, 0.271);
    let s = nalgebra::Schur::try_new(m + CMatrix::identity(n, n) * shift, 1e-12, 10_000)
        .expect("Schur iteration failed on a unitary matrix");
    let (q, _) = s.unpack();
    let t = q.adjoint() * m * &q;
    (q, (0..n).map(|j| t[(j, j)].arg()).collect())
}

fn gaussian_matrix<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// Haar-distributed element of SU(N).
///
/// QR of a complex Ginibre matrix with the phases of diag(R) moved into Q
/// gives Haar on U(N); dividing by det^{1/N} commutes with left translation
/// by SU(N), so the result is Haar on SU(N).
pub fn haar_sample_rng<R: Rng>(n: usize, rng: &mut R) -> Result<SpecialUnitary> {
    if n < 2 {
        return Err(Error::Dimension(2, n));
    }
    let z = gaussian_matrix(n, rng);
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    let det = q.determinant();
    let root = Complex64::from_polar(1.0, -det.arg() / n as f64);
    q *= root;
    Ok(SpecialUnitary::from_matrix_unchecked(q))
}

/// Haar sample from a seeded ChaCha8 stream.
pub fn haar_sample(n: usize, seed: u64) -> Result<SpecialUnitary> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    haar_sample_rng(n, &mut rng)
}
