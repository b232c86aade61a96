use super::geodesic::{geodesic_log, matching_distance};
use super::{gaussian_matrix, haar_sample_rng, CMatrix, SpecialUnitary};
use crate::circle::{grid_angle, measured_rho, CircleFunction, Potential};
use crate::transport::dual_pair_violation;
use crate::{Error, Result};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Tr f(U) = Σ_j f(λ_j(U)) by functional calculus on the eigenangles.
pub fn trace_function(u: &SpecialUnitary, f: &impl CircleFunction) -> f64 {
    u.eigenangles().angles().iter().map(|&a| f.eval(a)).sum()
}

/// Tr Q(U) = N·q_0 + 2Re Σ_k q_k Tr(U^k) from matrix powers.
pub fn trace_potential_series(u: &SpecialUnitary, q: &Potential) -> f64 {
    let n = u.n();
    let mut power = CMatrix::identity(n, n);
    let mut total = n as f64 * q.q0();
    for qk in q.modes() {
        power = &power * u.matrix();
        total += 2.0 * (qk * power.trace()).re;
    }
    total
}

/// Random traceless anti-Hermitian X with Re Tr(X*X) = 1.
pub fn random_tangent<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let a = gaussian_matrix(n, rng);
    let mut x = (&a - a.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = x.trace() / n as f64;
    for j in 0..n {
        x[(j, j)] -= tr;
    }
    let norm = x.norm();
    x / Complex64::new(norm, 0.0)
}

/// exp(tX) for anti-Hermitian X through the Hermitian matrix −iX.
fn exp_tangent(x: &CMatrix, t: f64) -> CMatrix {
    let h = x * Complex64::new(0.0, -1.0);
    let eig = h.symmetric_eigen();
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&l| Complex64::from_polar(1.0, t * l))
        .collect();
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&DVector::from_vec(phases)) * v.adjoint()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HessianProbe {
    /// (Ψ(Ue^{hX}) − 2Ψ(U) + Ψ(Ue^{−hX}))/h².
    pub second_difference: f64,
    /// (4D(h/2) − D(h))/3.
    pub richardson: f64,
}

/// Second derivative of t ↦ Tr Q(U e^{tX}) at t = 0 by central differences.
pub fn hessian_probe(
    q: &Potential,
    u: &SpecialUnitary,
    x: &CMatrix,
    h: f64,
) -> Result<HessianProbe> {
    let n = u.n();
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::Dimension(n, x.nrows()));
    }
    if !(1e-4..=1e-2).contains(&h) {
        return Err(Error::Domain(format!("step {h} outside [1e-4, 1e-2]")));
    }
    if (x + x.adjoint()).norm() > 1e-10 || x.trace().norm() > 1e-10 {
        return Err(Error::Domain("X must be traceless anti-Hermitian".into()));
    }
    if (x.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Domain("X must have unit norm".into()));
    }
    let psi = |t: f64| {
        let w = SpecialUnitary::from_matrix_unchecked(u.matrix() * exp_tangent(x, t));
        trace_function(&w, q)
    };
    let centre = psi(0.0);
    let diff = |s: f64| (psi(s) - 2.0 * centre + psi(-s)) / (s * s);
    let d1 = diff(h);
    let d2 = diff(h / 2.0);
    Ok(HessianProbe {
        second_difference: d1,
        richardson: (4.0 * d2 - d1) / 3.0,
    })
}

/// Margins of one Prékopa–Leindler hypothesis trial; each is nonnegative when the
/// corresponding inequality holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlTrial {
    pub index: usize,
    pub distance: f64,
    pub matching: f64,
    /// Tr h̃(W) minus the right-hand side of the hypothesis.
    pub hypothesis: f64,
    /// −(ρθ(1−θ)/2)d² − R_{θ,N}(W;U,V).
    pub convexity: f64,
    /// Tr g(V) + ((1+2ρ)/4)d² − Tr f(U).
    pub dual_trace: f64,
    /// Tr g(V) + ((1+2ρ)/4)δ² − Tr f(U).
    pub dual_trace_matching: f64,
    /// d − δ.
    pub contraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlHypothesisReport {
    pub n: usize,
    pub theta: f64,
    pub rho: f64,
    pub seed: u64,
    pub trials: usize,
    pub skipped: usize,
    /// Grid violation of f ≤ g + ((1+2ρ)/4)d² found by the precondition scan.
    pub dual_pair_violation: f64,
    pub worst_hypothesis: f64,
    pub worst_convexity: f64,
    pub worst_dual_trace: f64,
    pub worst_contraction: f64,
    pub per_trial: Vec<PlTrial>,
}

impl PlHypothesisReport {
    /// Smallest margin across all checked inequalities.
    pub fn worst(&self) -> f64 {
        self.worst_hypothesis
            .min(self.worst_convexity)
            .min(self.worst_dual_trace)
            .min(self.worst_contraction)
    }
}

/// Monte Carlo check of the hypothesis of the free Prékopa–Leindler lemma for
/// the substitution f̃ = θf, g̃ = −(1−θ)g, h̃ = 0.
///
/// (f, g) must satisfy f(ζ) ≤ g(η) + ((1+2ρ)/4)d(ζ,η)²; this is checked on a
/// 256-point grid before sampling. Trials where U and V are on each other's
/// cut locus are skipped and counted.
#[allow(clippy::too_many_arguments)]
pub fn pl_hypothesis_check<F, G>(
    q: &Potential,
    f: &F,
    g: &G,
    theta: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<PlHypothesisReport>
where
    F: CircleFunction + Sync,
    G: CircleFunction + Sync,
{
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!(
            "theta must lie in (0,1), got {theta}"
        )));
    }
    let rho = measured_rho(q);
    if !rho.admissible {
        return Err(Error::HypothesisViolation { rho: rho.rho });
    }
    let rho = rho.rho;
    let rho_prime = (1.0 + 2.0 * rho) / 2.0;
    let m = 256;
    let fg: Vec<f64> = (0..m).map(|j| f.eval(grid_angle(j, m))).collect();
    let gg: Vec<f64> = (0..m).map(|j| g.eval(grid_angle(j, m))).collect();
    let violation = dual_pair_violation(&fg, &gg, rho_prime);
    if violation > 1e-12 {
        return Err(Error::Precondition(format!(
            "f ≤ g + ((1+2ρ)/4)d² fails on the grid by {violation:e}"
        )));
    }

    let tt = theta * (1.0 - theta);
    let results: Vec<Result<Option<PlTrial>>> = (0..trials)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let u = haar_sample_rng(n, &mut rng)?;
            let v = haar_sample_rng(n, &mut rng)?;
            let log = geodesic_log(&u, &v)?;
            if log.ambiguous {
                return Ok(None);
            }
            let d = log.distance();
            let w = super::geodesic_point(&u, &v, theta)?;
            let (tq_u, tq_v, tq_w) = (
                trace_function(&u, q),
                trace_function(&v, q),
                trace_function(&w, q),
            );
            let r = tq_w - (1.0 - theta) * tq_u - theta * tq_v;
            let tf = trace_function(&u, f);
            let tg = trace_function(&v, g);
            let delta = matching_distance(&u.eigenangles(), &v.eigenangles())?;
            let rhs =
                (1.0 - theta) * theta * tf + theta * (-(1.0 - theta) * tg) + r - tt / 4.0 * d * d;
            Ok(Some(PlTrial {
                index,
                distance: d,
                matching: delta,
                hypothesis: -rhs,
                convexity: -rho * tt / 2.0 * d * d - r,
                dual_trace: tg + rho_prime / 2.0 * d * d - tf,
                dual_trace_matching: tg + rho_prime / 2.0 * delta * delta - tf,
                contraction: d - delta,
            }))
        })
        .collect();

    let mut per_trial = Vec::with_capacity(trials);
    let mut skipped = 0;
    for r in results {
        match r? {
            Some(t) => per_trial.push(t),
            None => skipped += 1,
        }
    }
    let worst = |sel: fn(&PlTrial) -> f64| per_trial.iter().map(sel).fold(f64::INFINITY, f64::min);
    Ok(PlHypothesisReport {
        n,
        theta,
        rho,
        seed,
        trials,
        skipped,
        dual_pair_violation: violation,
        worst_hypothesis: worst(|t| t.hypothesis),
        worst_convexity: worst(|t| t.convexity),
        worst_dual_trace: worst(|t| t.dual_trace.min(t.dual_trace_matching)),
        worst_contraction: worst(|t| t.contraction),
        per_trial,
    })
}
