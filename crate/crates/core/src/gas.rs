//! Eigenvalue gas of the biased SU(N) ensemble exp(−N Tr Q(U)) dU.
//!
//! After Weyl integration the eigenangles have unnormalised log-density
//! 2Σ_{i<j} log|e^{iθ_i} − e^{iθ_j}| − N Σ_j Q(θ_j) on the torus slice
//! Σθ_j ≡ 0 (mod 2π).

use crate::circle::{wrap_positive, wrap_signed, CircleMeasure, Potential, PI, TWO_PI};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

/// Tolerance on the determinant-one constraint.
pub const TOL_CONSTRAINT: f64 = 1e-12;

/// Steps between re-projections onto Σθ ≡ 0.
const REPROJECT_EVERY: usize = 1024;

/// Eigenangles of an SU(N) element.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GasState {
    angles: Vec<f64>,
}

fn sum_defect(angles: &[f64]) -> f64 {
    let s: f64 = angles.iter().sum();
    s - TWO_PI * (s / TWO_PI).round()
}

impl GasState {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.len() < 2 {
            return Err(Error::Dimension(2, angles.len()));
        }
        let angles: Vec<f64> = angles.into_iter().map(wrap_signed).collect();
        let defect = sum_defect(&angles);
        if defect.abs() > TOL_CONSTRAINT {
            return Err(Error::Constraint(format!(
                "angle sum is off 2πℤ by {defect:e}"
            )));
        }
        Ok(GasState { angles })
    }

    /// Equally spaced angles −π + 2π(j+½)/N, which maximise the Vandermonde.
    pub fn equally_spaced(n: usize) -> Result<Self> {
        GasState::new(
            (0..n)
                .map(|j| -PI + TWO_PI * (j as f64 + 0.5) / n as f64)
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
}

fn pair_term(a: f64, b: f64) -> f64 {
    (2.0 * ((a - b) / 2.0).sin().abs()).ln()
}

/// 2Σ_{i<j} log|e^{iθ_i} − e^{iθ_j}| − N Σ_j Q(θ_j).
pub fn log_weight(s: &GasState, q: &Potential) -> Result<f64> {
    let defect = sum_defect(&s.angles);
    if defect.abs() > TOL_CONSTRAINT {
        return Err(Error::Constraint(format!(
            "angle sum is off 2πℤ by {defect:e}"
        )));
    }
    let n = s.n();
    let mut w = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            w += 2.0 * pair_term(s.angles[i], s.angles[j]);
        }
    }
    let pot: f64 = s.angles.iter().map(|&a| q.value_at(a)).sum();
    Ok(w - n as f64 * pot)
}

/// Atomic measure with mass 1/N at each eigenangle.
pub fn empirical_measure(s: &GasState) -> CircleMeasure {
    CircleMeasure::equal_atoms(&s.angles).expect("gas states have finite angles")
}

/// Average of empirical measures binned to the nearest grid angle.
pub fn mean_empirical_grid(states: &[GasState], n_grid: usize) -> Result<CircleMeasure> {
    if states.is_empty() {
        return Err(Error::InvalidMeasure("no states to average".into()));
    }
    let mut w = vec![0.0; n_grid];
    let mut count = 0usize;
    for s in states {
        for &a in &s.angles {
            let j = (wrap_positive(a) / TWO_PI * n_grid as f64).round() as usize % n_grid;
            w[j] += 1.0;
            count += 1;
        }
    }
    CircleMeasure::grid_normalized(w.into_iter().map(|x| x / count as f64).collect())
}

/// Metropolis chain settings. `steps` counts all proposals including burn-in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainConfig {
    pub steps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub proposal_width: f64,
    pub seed: u64,
}

impl ChainConfig {
    /// Burn-in of 10⁴·N proposals followed by `samples` states thinned by `thin`.
    pub fn for_samples(n: usize, samples: usize, thin: usize, seed: u64) -> Self {
        let burn_in = 10_000 * n;
        ChainConfig {
            steps: burn_in + samples * thin,
            burn_in,
            thin,
            proposal_width: (2.0 / n as f64).clamp(0.05, 1.0),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 || self.steps == 0 {
            return Err(Error::Domain("steps and thin must be positive".into()));
        }
        if self.burn_in >= self.steps {
            return Err(Error::Domain(format!(
                "burn_in {} must be below steps {}",
                self.burn_in, self.steps
            )));
        }
        if !(self.proposal_width > 0.0 && self.proposal_width.is_finite()) {
            return Err(Error::Domain("proposal width must be positive".into()));
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        (self.steps - self.burn_in) / self.thin
    }
}

/// One thinned state of a chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSample {
    pub step: usize,
    pub state: GasState,
    pub log_weight: f64,
    /// Whether the proposal at this step was accepted.
    pub accepted: bool,
}

/// Metropolis chain with pairwise moves θ_i += ε, θ_j −= ε that keep the
/// angle sum fixed. Yields thinned post-burn-in states.
pub struct GasChain<'a> {
    q: &'a Potential,
    cfg: ChainConfig,
    rng: ChaCha8Rng,
    angles: Vec<f64>,
    log_w: f64,
    step: usize,
    proposals_after_burn: usize,
    accepted_after_burn: usize,
}

impl<'a> GasChain<'a> {
    pub fn new(q: &'a Potential, n: usize, cfg: ChainConfig) -> Result<Self> {
        cfg.validate()?;
        let start = GasState::equally_spaced(n)?;
        let log_w = log_weight(&start, q)?;
        Ok(GasChain {
            q,
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            angles: start.angles,
            log_w,
            step: 0,
            proposals_after_burn: 0,
            accepted_after_burn: 0,
        })
    }

    /// Accepted fraction of post-burn-in proposals.
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals_after_burn == 0 {
            0.0
        } else {
            self.accepted_after_burn as f64 / self.proposals_after_burn as f64
        }
    }

    /// A tuning warning when the acceptance rate lies outside [0.05, 0.95].
    pub fn tuning_warning(&self) -> Option<String> {
        let r = self.acceptance_rate();
        (self.proposals_after_burn > 0 && !(0.05..=0.95).contains(&r))
            .then(|| format!("acceptance rate {r:.3} outside [0.05, 0.95]; adjust proposal_width"))
    }

    /// Change in log weight from moving angle i by +ε and j by −ε.
    fn delta(&self, i: usize, j: usize, ai: f64, aj: f64) -> f64 {
        let n = self.angles.len();
        let old = (self.angles[i], self.angles[j]);
        let mut d = 2.0 * (pair_term(ai, aj) - pair_term(old.0, old.1));
        for k in 0..n {
            if k == i || k == j {
                continue;
            }
            let t = self.angles[k];
            d += 2.0
                * (pair_term(ai, t) + pair_term(aj, t) - pair_term(old.0, t) - pair_term(old.1, t));
        }
        d - n as f64
            * (self.q.value_at(ai) + self.q.value_at(aj)
                - self.q.value_at(old.0)
                - self.q.value_at(old.1))
    }

    /// One Metropolis proposal; returns whether it was accepted.
    fn advance(&mut self) -> bool {
        let n = self.angles.len();
        let i = self.rng.random_range(0..n);
        let mut j = self.rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let eps = self
            .rng
            .random_range(-self.cfg.proposal_width..self.cfg.proposal_width);
        let ai = wrap_signed(self.angles[i] + eps);
        let aj = wrap_signed(self.angles[j] - eps);
        let d = self.delta(i, j, ai, aj);
        let u: f64 = self.rng.random();
        let accept = d.is_finite() && (d >= 0.0 || u < d.exp());
        if accept {
            self.angles[i] = ai;
            self.angles[j] = aj;
            self.log_w += d;
        }
        self.step += 1;
        if self.step > self.cfg.burn_in {
            self.proposals_after_burn += 1;
            self.accepted_after_burn += accept as usize;
        }
        if self.step.is_multiple_of(REPROJECT_EVERY) {
            let defect = sum_defect(&self.angles) / n as f64;
            for a in self.angles.iter_mut() {
                *a = wrap_signed(*a - defect);
            }
            self.log_w = log_weight(
                &GasState {
                    angles: self.angles.clone(),
                },
                self.q,
            )
            .expect("re-projected state satisfies the constraint");
        }
        accept
    }
}

impl Iterator for GasChain<'_> {
    type Item = ChainSample;

    fn next(&mut self) -> Option<ChainSample> {
        loop {
            if self.step >= self.cfg.steps {
                return None;
            }
            let accepted = self.advance();
            if self.step > self.cfg.burn_in
                && (self.step - self.cfg.burn_in).is_multiple_of(self.cfg.thin)
            {
                return Some(ChainSample {
                    step: self.step,
                    state: GasState {
                        angles: self.angles.clone(),
                    },
                    log_weight: self.log_w,
                    accepted,
                });
            }
        }
    }
}

/// Run a chain and collect thinned states.
pub fn mcmc_sample(
    q: &Potential,
    n: usize,
    cfg: ChainConfig,
) -> Result<(Vec<GasState>, ChainStats)> {
    let mut chain = GasChain::new(q, n, cfg)?;
    let states: Vec<GasState> = chain.by_ref().map(|s| s.state).collect();
    Ok((states, ChainStats::from_chain(&chain)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainStats {
    pub acceptance_rate: f64,
    pub warning: Option<String>,
}

impl ChainStats {
    fn from_chain(chain: &GasChain<'_>) -> Self {
        ChainStats {
            acceptance_rate: chain.acceptance_rate(),
            warning: chain.tuning_warning(),
        }
    }
}

/// Stream thinned states as CSV rows: step, angle_0..angle_{N−1},
/// log_weight, accepted.
pub fn write_trace_csv<W: Write>(
    q: &Potential,
    n: usize,
    cfg: ChainConfig,
    out: W,
) -> Result<ChainStats> {
    let mut chain = GasChain::new(q, n, cfg)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_string()];
    header.extend((0..n).map(|k| format!("angle_{k}")));
    header.push("log_weight".into());
    header.push("accepted".into());
    w.write_record(&header)?;
    for s in chain.by_ref() {
        let mut row = vec![s.step.to_string()];
        row.extend(s.state.angles.iter().map(|a| format!("{a:?}")));
        row.push(format!("{:?}", s.log_weight));
        row.push(s.accepted.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(ChainStats::from_chain(&chain))
}

/// Mean and batch-means standard error.
pub fn batch_means(values: &[f64], batches: usize) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n.max(1) as f64;
    let b = batches.min(n).max(2);
    let size = n / b;
    if size == 0 {
        return (mean, f64::NAN);
    }
    let means: Vec<f64> = (0..b)
        .map(|k| values[k * size..(k + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let mm = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mm).powi(2)).sum::<f64>() / (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}

/// Expectation of (1/N)Σf(θ_j) at one interpolation node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeEstimate {
    pub s: f64,
    pub seed: u64,
    pub mean: f64,
    pub std_error: f64,
    pub acceptance_rate: f64,
    pub warning: Option<String>,
}

/// Thermodynamic-integration estimate of (1/N²)log∫exp(N Tr f(U))dλ_N(Q).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PressureEstimate {
    pub n: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub nodes: Vec<NodeEstimate>,
}

/// Simpson weights on s_grid equally spaced nodes of [0, 1].
fn simpson_weights(m: usize) -> Result<Vec<f64>> {
    if m < 3 || m.is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "Simpson rule needs an odd node count >= 3, got {m}"
        )));
    }
    let h = 1.0 / (m - 1) as f64;
    Ok((0..m)
        .map(|k| {
            let c = if k == 0 || k == m - 1 {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect())
}

/// Per-node seed derived from the chain seed.
pub fn node_seed(seed: u64, node: usize) -> u64 {
    seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(node as u64 + 1))
}

/// (1/N²)·log∫exp(N Tr f)dλ_N(Q) = ∫₀¹ E_{Q−sf}[(1/N)Σ_j f(θ_j)] ds, each
/// expectation from an independent chain with its own derived seed.
pub fn pressure_mc(
    q: &Potential,
    f: &Potential,
    n: usize,
    cfg: ChainConfig,
    s_grid: usize,
) -> Result<PressureEstimate> {
    cfg.validate()?;
    let weights = simpson_weights(s_grid)?;
    if f.grid_values().iter().all(|&v| v == 0.0) {
        return Ok(PressureEstimate {
            n,
            estimate: 0.0,
            std_error: 0.0,
            nodes: Vec::new(),
        });
    }
    let nodes: Vec<Result<NodeEstimate>> = (0..s_grid)
        .into_par_iter()
        .map(|k| {
            let s = k as f64 / (s_grid - 1) as f64;
            let tilted = q.combine(f, 1.0, -s)?;
            let seed = node_seed(cfg.seed, k);
            let node_cfg = ChainConfig { seed, ..cfg };
            let mut chain = GasChain::new(&tilted, n, node_cfg)?;
            let obs: Vec<f64> = chain
                .by_ref()
                .map(|x| x.state.angles.iter().map(|&a| f.value_at(a)).sum::<f64>() / n as f64)
                .collect();
            let (mean, std_error) = batch_means(&obs, 25);
            Ok(NodeEstimate {
                s,
                seed,
                mean,
                std_error,
                acceptance_rate: chain.acceptance_rate(),
                warning: chain.tuning_warning(),
            })
        })
        .collect();
    let nodes: Vec<NodeEstimate> = nodes.into_iter().collect::<Result<_>>()?;
    let estimate = nodes.iter().zip(&weights).map(|(x, w)| w * x.mean).sum();
    let var: f64 = nodes
        .iter()
        .zip(&weights)
        .map(|(x, w)| (w * x.std_error).powi(2))
        .sum();
    Ok(PressureEstimate {
        n,
        estimate,
        std_error: var.sqrt(),
        nodes,
    })
}

/// Least-squares fit of a + b/N; returns (a, b).
pub fn extrapolate_inverse_n(points: &[(usize, f64)]) -> (f64, f64) {
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| 1.0 / p.0 as f64).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(points)
        .map(|(x, p)| (x - mx) * (p.1 - my))
        .sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}
