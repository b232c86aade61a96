//! Weighted logarithmic energy on the circle and its equilibrium measure.
//!
//! For a potential Q on the n-point grid and grid masses w,
//!
//! ```text
//! E_Q(w) = Σ_{k=1}^{n/2} |ŵ_k|²/k + Σ_j Q_j w_j
//! ```
//!
//! which is −Σ(μ) + ∫Q dμ with the spectral logarithmic energy. The
//! gradient of E_Q is the effective potential Q − 2U^μ, where
//! U^μ(θ) = ∫log|e^{iθ}−e^{iφ}|dμ(φ). At the minimiser ν_Q it is constant on
//! the support and no smaller elsewhere.

use crate::circle::spectral::GridFft;
use crate::circle::{log_energy_default, CircleMeasure, Potential};
use crate::{Error, ExtReal, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

/// −Σ(μ) + ∫Q dμ; `PosInf` for atomic μ.
pub fn weighted_energy(q: &Potential, mu: &CircleMeasure) -> Result<ExtReal> {
    match mu {
        CircleMeasure::Atomic(_) => Ok(ExtReal::PosInf),
        CircleMeasure::Grid(g) => {
            if g.n_grid() != q.n_grid() {
                return Err(Error::Dimension(q.n_grid(), g.n_grid()));
            }
            let linear = mu.integrate_grid(q.grid_values())?;
            Ok((-log_energy_default(mu)).add_finite(linear))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// Closed-form minimiser μ̂_k = −k·q_k, nonnegative on the grid.
    Spectral,
    /// Projected accelerated gradient on the probability simplex.
    Simplex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub stage: Stage,
    pub iterations: usize,
    /// Largest violation of the Euler–Lagrange condition.
    pub gap: f64,
    /// Σ_j w_j (g_j − min g), an upper bound on E_Q(w) − min E_Q.
    pub objective_gap: f64,
    /// Whether the positivity constraint binds somewhere.
    pub active_constraint: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub nu_q: CircleMeasure,
    pub energy: f64,
    pub b_constant: f64,
    pub solver_report: SolverReport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stop when the Euler–Lagrange violation drops below this.
    pub gap_tol: f64,
    pub max_iterations: usize,
    /// Skip the closed-form stage.
    pub force_simplex: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gap_tol: 1e-9,
            max_iterations: 200_000,
            force_simplex: false,
        }
    }
}

/// Energy evaluation on a fixed grid.
struct EnergyModel<'a> {
    fft: GridFft,
    q: &'a [f64],
    n: usize,
}

impl<'a> EnergyModel<'a> {
    fn new(q: &'a Potential) -> Self {
        let n = q.n_grid();
        EnergyModel {
            fft: GridFft::new(n),
            q: q.grid_values(),
            n,
        }
    }

    /// (Σ|ŵ_k|²/k, its gradient Σ 2Re(ŵ_k/k e^{ikθ})) at w.
    fn quadratic(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let spec = self.fft.forward_real(w);
        let half = self.n / 2;
        let mut energy = 0.0;
        let scaled: Vec<Complex64> = (1..=half)
            .map(|k| {
                let c = spec[k];
                energy += c.norm_sqr() / k as f64;
                c / k as f64
            })
            .collect();
        (energy, self.fft.synthesize_real(&scaled))
    }

    /// (energy, gradient) at w.
    fn eval(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let (mut energy, mut grad) = self.quadratic(w);
        for ((g, qj), wj) in grad.iter_mut().zip(self.q).zip(w) {
            *g += qj;
            energy += qj * wj;
        }
        (energy, grad)
    }

    /// Minimise over w + v with v supported on `support` and Σv = 0, by
    /// conjugate gradients on the restricted quadratic. Returns v.
    fn restricted_newton(&self, w: &[f64], support: &[bool]) -> Vec<f64> {
        let project = |x: &mut [f64]| {
            let (sum, cnt) = x
                .iter()
                .zip(support)
                .filter(|(_, &s)| s)
                .fold((0.0, 0usize), |(a, c), (v, _)| (a + v, c + 1));
            let mean = if cnt > 0 { sum / cnt as f64 } else { 0.0 };
            for (v, &s) in x.iter_mut().zip(support) {
                *v = if s { *v - mean } else { 0.0 };
            }
        };
        let (_, g) = self.eval(w);
        let mut r: Vec<f64> = g.iter().map(|x| -x).collect();
        project(&mut r);
        let mut v = vec![0.0; self.n];
        let mut p = r.clone();
        let mut rr: f64 = r.iter().map(|x| x * x).sum();
        let rr0 = rr;
        let cnt = support.iter().filter(|&&s| s).count();
        for _ in 0..(2 * cnt + 10) {
            if rr <= rr0 * 1e-30 || rr == 0.0 {
                break;
            }
            let (_, mut hp) = self.quadratic(&p);
            project(&mut hp);
            let php: f64 = p.iter().zip(&hp).map(|(a, b)| a * b).sum();
            if php <= 0.0 {
                break;
            }
            let alpha = rr / php;
            for j in 0..self.n {
                v[j] += alpha * p[j];
                r[j] -= alpha * hp[j];
            }
            let rr_new: f64 = r.iter().map(|x| x * x).sum();
            let beta = rr_new / rr;
            rr = rr_new;
            for j in 0..self.n {
                p[j] = r[j] + beta * p[j];
            }
        }
        v
    }

    /// Primal active-set refinement from a feasible point. Returns the
    /// refined point if it meets `tol`.
    fn polish(&self, start: &[f64], tol: f64) -> Option<Vec<f64>> {
        let mut w = start.to_vec();
        let mut support: Vec<bool> = w.iter().map(|&x| x > 0.0).collect();
        for _ in 0..200 {
            let v = self.restricted_newton(&w, &support);
            let mut step = 1.0_f64;
            for j in 0..self.n {
                if support[j] && v[j] < 0.0 {
                    step = step.min(w[j] / -v[j]);
                }
            }
            for j in 0..self.n {
                if support[j] {
                    w[j] += step * v[j];
                    if w[j] <= 0.0 || (step < 1.0 && w[j] <= 1e-300 + 1e-15 * step * v[j].abs()) {
                        w[j] = 0.0;
                    }
                }
            }
            if step < 1.0 {
                for j in 0..self.n {
                    if support[j] && w[j] <= 0.0 {
                        w[j] = 0.0;
                        support[j] = false;
                    }
                }
                continue;
            }
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            let (_, g) = self.eval(&w);
            let (gap, _) = optimality_gaps(&w, &g);
            if gap <= tol {
                return Some(w);
            }
            let level: f64 = w.iter().zip(&g).map(|(a, b)| a * b).sum();
            let mut added = false;
            for j in 0..self.n {
                if !support[j] && g[j] < level - tol {
                    support[j] = true;
                    added = true;
                }
            }
            if !added {
                return None;
            }
        }
        None
    }
}

/// (Euler–Lagrange violation, Frank–Wolfe gap) at w with gradient g.
fn optimality_gaps(w: &[f64], g: &[f64]) -> (f64, f64) {
    let level: f64 = w.iter().zip(g).map(|(a, b)| a * b).sum();
    let gmin = g.iter().copied().fold(f64::INFINITY, f64::min);
    let mut viol: f64 = 0.0;
    for (&wj, &gj) in w.iter().zip(g) {
        if wj > 0.0 {
            viol = viol.max((gj - level).abs());
        } else {
            viol = viol.max(level - gj);
        }
    }
    (viol, (level - gmin).max(0.0))
}

const POLISH_EVERY: usize = 50;

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

fn finish(w: Vec<f64>, energy: f64, report: SolverReport) -> Result<EquilibriumResult> {
    Ok(EquilibriumResult {
        nu_q: CircleMeasure::grid_normalized(w)?,
        energy,
        b_constant: -energy,
        solver_report: report,
    })
}

/// Minimise E_Q over probability measures on the grid of Q.
pub fn solve_equilibrium_with(q: &Potential, cfg: &SolverConfig) -> Result<EquilibriumResult> {
    let n = q.n_grid();
    let model = EnergyModel::new(q);

    // Closed form: μ̂_k = −k q_k.
    let coeffs: Vec<Complex64> = q
        .modes()
        .iter()
        .enumerate()
        .map(|(i, qk)| -((i + 1) as f64) * qk)
        .collect();
    let inv_n = 1.0 / n as f64;
    let candidate: Vec<f64> = model
        .fft
        .synthesize_real(&coeffs)
        .into_iter()
        .map(|v| (1.0 + v) * inv_n)
        .collect();

    if !cfg.force_simplex && candidate.iter().all(|&w| w >= 0.0) {
        let (energy, grad) = model.eval(&candidate);
        let (gap, objective_gap) = optimality_gaps(&candidate, &grad);
        if gap <= cfg.gap_tol {
            let report = SolverReport {
                stage: Stage::Spectral,
                iterations: 0,
                gap,
                objective_gap,
                active_constraint: candidate.contains(&0.0),
            };
            return finish(candidate, energy, report);
        }
    }

    // FISTA with function-value restart; the step 1/L uses the exact
    // Lipschitz constant L = n of the gradient (mode k = 1).
    let start = if cfg.force_simplex {
        vec![inv_n; n]
    } else {
        project_simplex(&candidate)
    };
    let mut lipschitz = n as f64;
    let mut x = start;
    let (mut fx, gx) = model.eval(&x);
    let mut y = x.clone();
    let (mut fy, mut gy) = (fx, gx.clone());
    let mut t = 1.0_f64;
    let mut last_gap = f64::INFINITY;
    for iter in 1..=cfg.max_iterations {
        // Backtracking on the quadratic upper bound.
        let (x_new, f_new, g_new) = loop {
            let step = 1.0 / lipschitz;
            let trial: Vec<f64> = y.iter().zip(&gy).map(|(a, b)| a - step * b).collect();
            let xn = project_simplex(&trial);
            let (fxn, gxn) = model.eval(&xn);
            let mut lin = 0.0;
            let mut sq = 0.0;
            for ((a, b), g) in xn.iter().zip(&y).zip(&gy) {
                lin += g * (a - b);
                sq += (a - b) * (a - b);
            }
            if fxn <= fy + lin + 0.5 * lipschitz * sq + 1e-15 * fy.abs().max(1.0) {
                break (xn, fxn, gxn);
            }
            lipschitz *= 2.0;
        };

        let (mut gap, mut objective_gap) = optimality_gaps(&x_new, &g_new);
        let (mut x_new, mut f_new, mut g_new) = (x_new, f_new, g_new);
        if gap > cfg.gap_tol && iter % POLISH_EVERY == 0 {
            if let Some(w) = model.polish(&x_new, cfg.gap_tol) {
                let (f, g) = model.eval(&w);
                (gap, objective_gap) = optimality_gaps(&w, &g);
                (x_new, f_new, g_new) = (w, f, g);
            }
        }
        last_gap = gap;
        if gap <= cfg.gap_tol {
            let report = SolverReport {
                stage: Stage::Simplex,
                iterations: iter,
                gap,
                objective_gap,
                active_constraint: x_new.contains(&0.0),
            };
            return finish(x_new, f_new, report);
        }

        if f_new > fx {
            // Restart momentum.
            t = 1.0;
            y = x_new.clone();
            fy = f_new;
            gy = g_new.clone();
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            y = x_new
                .iter()
                .zip(&x)
                .map(|(a, b)| a + beta * (a - b))
                .collect();
            let (f, g) = model.eval(&y);
            fy = f;
            gy = g;
            t = t_next;
        }
        x = x_new;
        fx = f_new;
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iterations,
        gap: last_gap,
    })
}

/// [`solve_equilibrium_with`] under the default configuration.
pub fn solve_equilibrium(q: &Potential) -> Result<EquilibriumResult> {
    solve_equilibrium_with(q, &SolverConfig::default())
}

/// Equilibrium solver with a cache keyed by potential fingerprint.
///
/// Concurrent readers share results; concurrent solves of the same potential
/// store the same value.
#[derive(Debug, Default)]
pub struct EquilibriumSolver {
    config: SolverConfig,
    cache: RwLock<HashMap<u64, Arc<EquilibriumResult>>>,
}

impl EquilibriumSolver {
    pub fn new(config: SolverConfig) -> Self {
        EquilibriumSolver {
            config,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn solve(&self, q: &Potential) -> Result<Arc<EquilibriumResult>> {
        let key = q.fingerprint();
        if let Some(hit) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let res = Arc::new(solve_equilibrium_with(q, &self.config)?);
        let mut cache = self.cache.write().expect("cache lock");
        Ok(Arc::clone(cache.entry(key).or_insert(res)))
    }

    /// B(Q) = −E_Q(ν_Q).
    pub fn b_constant(&self, q: &Potential) -> Result<f64> {
        Ok(self.solve(q)?.b_constant)
    }

    /// Σ̃_Q(μ) = −Σ(μ) + ∫Q dμ + B(Q).
    pub fn relative_free_entropy(&self, q: &Potential, mu: &CircleMeasure) -> Result<ExtReal> {
        let b = self.b_constant(q)?;
        Ok(weighted_energy(q, mu)?.add_finite(b))
    }

    /// j_Q(f) = E_Q(ν_Q) − E_{Q−f}(ν_{Q−f}).
    pub fn free_pressure(&self, q: &Potential, f: &Potential) -> Result<f64> {
        let shifted = q.sub(f)?;
        Ok(self.solve(q)?.energy - self.solve(&shifted)?.energy)
    }

    pub fn cached(&self) -> usize {
        self.cache.read().expect("cache lock").len()
    }
}

/// Σ̃_Q(μ) with a one-off solve.
pub fn relative_free_entropy(q: &Potential, mu: &CircleMeasure) -> Result<ExtReal> {
    EquilibriumSolver::default().relative_free_entropy(q, mu)
}

/// j_Q(f) with one-off solves.
pub fn free_pressure(q: &Potential, f: &Potential) -> Result<f64> {
    EquilibriumSolver::default().free_pressure(q, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{grid_angle, TWO_PI};

    #[test]
    fn cosine_closed_form() {
        let n = 256;
        let q = Potential::cos(n, 1.0);
        let res = solve_equilibrium(&q).unwrap();
        assert_eq!(res.solver_report.stage, Stage::Spectral);
        let w = res.nu_q.grid_weights().unwrap();
        for (j, &wj) in w.iter().enumerate() {
            let expect = (1.0 - grid_angle(j, n).cos()) / n as f64;
            assert!((wj - expect).abs() < 1e-14);
        }
        assert!((res.energy + 0.25).abs() < 1e-12);
        assert!((res.b_constant - 0.25).abs() < 1e-12);
    }

    #[test]
    fn simplex_stage_matches_closed_form() {
        let n = 128;
        let q = Potential::cos(n, 0.6);
        let a = solve_equilibrium(&q).unwrap();
        let cfg = SolverConfig {
            force_simplex: true,
            ..SolverConfig::default()
        };
        let b = solve_equilibrium_with(&q, &cfg).unwrap();
        assert_eq!(b.solver_report.stage, Stage::Simplex);
        let wa = a.nu_q.grid_weights().unwrap();
        let wb = b.nu_q.grid_weights().unwrap();
        let linf = wa
            .iter()
            .zip(wb)
            .map(|(x, y)| (x - y).abs() * n as f64 / TWO_PI)
            .fold(0.0, f64::max);
        assert!(linf < 1e-6, "linf {linf}");
        assert!((a.energy - b.energy).abs() < 1e-10);
    }

    #[test]
    fn strong_cosine_has_gap() {
        // For Q = c cos with c > 1 the density is
        // (c/π) cos(φ/2) sqrt(sin²(α/2) − sin²(φ/2)), φ = θ − π, |φ| ≤ α,
        // with sin²(α/2) = 1/c.
        let n = 512;
        let c = 2.0;
        let q = Potential::cos(n, c);
        let res = solve_equilibrium(&q).unwrap();
        assert_eq!(res.solver_report.stage, Stage::Simplex);
        assert!(res.solver_report.active_constraint);
        let alpha = 2.0 * (1.0 / c).sqrt().asin();
        let w = res.nu_q.grid_weights().unwrap();
        let mut err: f64 = 0.0;
        for (j, &wj) in w.iter().enumerate() {
            let phi = crate::circle::wrap_signed(grid_angle(j, n) - std::f64::consts::PI);
            let s = (alpha / 2.0).sin().powi(2) - (phi / 2.0).sin().powi(2);
            let dens = if s > 0.0 {
                c / std::f64::consts::PI * (phi / 2.0).cos() * s.sqrt()
            } else {
                0.0
            };
            if (phi.abs() - alpha).abs() > 4.0 * TWO_PI / n as f64 {
                err = err.max((wj * n as f64 / TWO_PI - dens).abs());
            }
        }
        assert!(err < 2e-2, "density error {err}");
    }

    #[test]
    fn free_pressure_identities() {
        let n = 128;
        let solver = EquilibriumSolver::default();
        let zero = Potential::zero(n);
        let f = Potential::cos(n, 1.0);
        // j_0(cos): E_0(ν_0) = 0 and E_{−cos}(ν) = −1/4.
        let j = solver.free_pressure(&zero, &f).unwrap();
        assert!((j - 0.25).abs() < 1e-12);
        assert_eq!(solver.free_pressure(&f, &zero).unwrap(), 0.0);
        let nu = solver.solve(&f).unwrap().nu_q.clone();
        let s = solver.relative_free_entropy(&f, &nu).unwrap();
        assert!(s.to_f64().abs() < 1e-12);
        assert!(solver.cached() >= 2);
    }

    #[test]
    fn relative_entropy_nonnegative() {
        let n = 64;
        let q = Potential::trig(n, 0.0, &[(1, 0.7, 0.2), (2, -0.3, 0.4)]).unwrap();
        let solver = EquilibriumSolver::default();
        for k in 0..5 {
            let mu =
                CircleMeasure::from_density(n, |t: f64| 1.0 + 0.5 * (k as f64 * t + 0.3).sin())
                    .unwrap();
            let s = solver.relative_free_entropy(&q, &mu).unwrap();
            assert!(s.to_f64() >= -1e-10);
        }
        let atom = CircleMeasure::dirac(0.0);
        assert_eq!(
            solver.relative_free_entropy(&q, &atom).unwrap(),
            ExtReal::PosInf
        );
    }

    #[test]
    fn pressure_convex_in_f() {
        let n = 64;
        let solver = EquilibriumSolver::default();
        let q = Potential::cos(n, 0.4);
        let f1 = Potential::trig(n, 0.0, &[(1, 0.0, 1.5)]).unwrap();
        let f2 = Potential::trig(n, 0.1, &[(2, 0.8, 0.0)]).unwrap();
        let mid = f1.combine(&f2, 0.5, 0.5).unwrap();
        let a = solver.free_pressure(&q, &f1).unwrap();
        let b = solver.free_pressure(&q, &f2).unwrap();
        let m = solver.free_pressure(&q, &mid).unwrap();
        assert!(m <= 0.5 * (a + b) + 1e-9);
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 2.0, -1.0, 0.1]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.iter().all(|&x| x >= 0.0));
        assert_eq!(p[2], 0.0);
    }
}
