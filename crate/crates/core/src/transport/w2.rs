use crate::circle::{angular_distance, wrap_positive, CircleMeasure, TOL_NORMALIZATION, TWO_PI};
use crate::{Error, Result};
use serde::Serialize;

/// An optimal coupling between two measures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportPlan {
    pub source: CircleMeasure,
    pub target: CircleMeasure,
    /// (source index, target index, mass). Indices refer to grid cells for
    /// grid measures and to atoms otherwise.
    pub couplings: Vec<(usize, usize, f64)>,
    /// Σ mass·½d², equal to W².
    pub cost: f64,
    /// Bound on |W − W_continuum| from collapsing grid cells to their left
    /// endpoints; zero for atomic inputs.
    pub discretization_bound: f64,
}

impl TransportPlan {
    pub fn wasserstein(&self) -> f64 {
        self.cost.sqrt()
    }
}

/// Sorted atoms or cells with cumulative masses. An atom is a cell of zero
/// width; a cell spreads its mass uniformly over [angle, angle + width).
struct Quantile {
    angles: Vec<f64>,
    widths: Vec<f64>,
    /// Original index of each sorted atom.
    index: Vec<usize>,
    /// cum[i] = mass of atoms 0..i; cum[len] = 1.
    cum: Vec<f64>,
}

impl Quantile {
    fn new(mu: &CircleMeasure) -> Self {
        Self::build(mu, 0.0)
    }

    /// Grid masses spread over cells of width 2π/n centred at θ_j.
    fn cells(mu: &CircleMeasure, n: usize) -> Self {
        Self::build(mu, TWO_PI / n as f64)
    }

    fn build(mu: &CircleMeasure, width: f64) -> Self {
        let mut atoms: Vec<(f64, usize, f64)> = mu
            .to_atoms()
            .into_iter()
            .enumerate()
            .filter(|(_, a)| a.mass > 0.0)
            .map(|(i, a)| {
                let start = if width > 0.0 {
                    a.angle - width / 2.0
                } else {
                    wrap_positive(a.angle)
                };
                (start, i, a.mass)
            })
            .collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let total: f64 = atoms.iter().map(|a| a.2).sum();
        let mut cum = Vec::with_capacity(atoms.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for a in &atoms {
            acc += a.2 / total;
            cum.push(acc);
        }
        *cum.last_mut().expect("nonempty") = 1.0;
        Quantile {
            angles: atoms.iter().map(|a| a.0).collect(),
            widths: vec![width; atoms.len()],
            index: atoms.iter().map(|a| a.1).collect(),
            cum,
        }
    }

    fn len(&self) -> usize {
        self.angles.len()
    }

    /// Sorted position j with cum[j] ≤ r < cum[j+1], for r in [0, 1).
    fn locate(&self, r: f64) -> usize {
        let p = self.cum.partition_point(|&c| c <= r);
        p.saturating_sub(1).min(self.len() - 1)
    }
}

/// Walk the matching t ↦ (F⁻¹(t), G⁻¹(t+α)) over t ∈ [0,1), calling `visit`
/// with (sorted source, sorted target, lift offset in turns, mass).
fn walk(f: &Quantile, g: &Quantile, alpha: f64, mut visit: impl FnMut(usize, usize, f64, f64)) {
    let k0 = alpha.floor();
    let mut turns = k0;
    let mut j = g.locate(alpha - k0);
    let mut i = 0;
    let mut t = 0.0;
    while i < f.len() {
        let f_end = f.cum[i + 1];
        let g_end = turns + g.cum[j + 1] - alpha;
        let end = f_end.min(g_end).min(1.0);
        let mass = end - t;
        if mass > 0.0 {
            visit(i, j, turns, mass);
            t = end;
        }
        if g_end <= f_end {
            j += 1;
            if j == g.len() {
                j = 0;
                turns += 1.0;
            }
        }
        if f_end <= g_end || f_end <= t {
            i += 1;
        }
    }
}

/// Lifted cost ∫½|F⁻¹(t) − G⁻¹(t+α)|² dt, convex in α and piecewise linear
/// for atoms. Within each matched piece both quantile functions are affine in
/// t, so the integral is exact.
fn lifted_cost(f: &Quantile, g: &Quantile, alpha: f64) -> f64 {
    let mut cost = 0.0;
    let mut t = 0.0;
    walk(f, g, alpha, |i, j, turns, m| {
        let (mf, mg) = (f.cum[i + 1] - f.cum[i], g.cum[j + 1] - g.cum[j]);
        let x = f.angles[i] + f.widths[i] * (t - f.cum[i]) / mf;
        let y = g.angles[j] + TWO_PI * turns + g.widths[j] * (t + alpha - turns - g.cum[j]) / mg;
        let p = x - y;
        // Change of x − y across the piece; m ≤ mf, mg keeps it bounded.
        let r = f.widths[i] * (m / mf) - g.widths[j] * (m / mg);
        cost += 0.5 * m * (p * p + p * r + r * r / 3.0);
        t += m;
    });
    cost
}

fn minimise_shift(f: &Quantile, g: &Quantile) -> f64 {
    let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut c1 = lifted_cost(f, g, x1);
    let mut c2 = lifted_cost(f, g, x2);
    while hi - lo > 1e-13 {
        if c1 <= c2 {
            hi = x2;
            x2 = x1;
            c2 = c1;
            x1 = hi - phi * (hi - lo);
            c1 = lifted_cost(f, g, x1);
        } else {
            lo = x1;
            x1 = x2;
            c1 = c2;
            x2 = lo + phi * (hi - lo);
            c2 = lifted_cost(f, g, x2);
        }
    }
    // The minimum of a convex piecewise-linear function sits at a breakpoint
    // α = B_j − A_i + k; evaluate those near the bracket exactly.
    let slack = 1e-9;
    let mut best = (lifted_cost(f, g, lo), lo);
    let c_hi = lifted_cost(f, g, hi);
    if c_hi < best.0 {
        best = (c_hi, hi);
    }
    for &a in &f.cum[..f.len()] {
        let (wlo, whi) = (lo - slack + a, hi + slack + a);
        let mut k = wlo.floor();
        while k <= whi.floor() {
            let from = g.cum.partition_point(|&b| b + k < wlo);
            for &b in &g.cum[from..] {
                let alpha = b + k - a;
                if b + k > whi {
                    break;
                }
                let c = lifted_cost(f, g, alpha);
                if c < best.0 || (c == best.0 && alpha < best.1) {
                    best = (c, alpha);
                }
            }
            k += 1.0;
        }
    }
    best.1
}

fn check_normalised(mu: &CircleMeasure) -> Result<()> {
    let m = mu.total_mass();
    if (m - 1.0).abs() > TOL_NORMALIZATION {
        return Err(Error::InvalidMeasure(format!("total mass {m} is not 1")));
    }
    Ok(())
}

/// W between grid measures read as densities that are constant on the cells
/// [θ_j − π/n, θ_j + π/n). Unlike [`circular_w2`], which collapses each cell
/// to its centre, this is exact for the step densities, so W² scales
/// quadratically in a small perturbation the way the free entropy does.
pub fn circular_w2_density(mu: &CircleMeasure, nu: &CircleMeasure) -> Result<f64> {
    check_normalised(mu)?;
    check_normalised(nu)?;
    let (n, m) = match (mu.n_grid(), nu.n_grid()) {
        (Some(n), Some(m)) => (n, m),
        _ => return Err(Error::InvalidMeasure("grid measures required".into())),
    };
    let f = Quantile::cells(mu, n);
    let g = Quantile::cells(nu, m);
    let alpha = minimise_shift(&f, &g);
    Ok(lifted_cost(&f, &g, alpha).max(0.0).sqrt())
}

/// Quadratic Wasserstein distance W = (min ∫½d² dπ)^{1/2} and an optimal
/// plan.
///
/// The optimal plan is the monotone matching of the lifted quantile
/// functions after an optimal shift, so the search is one-dimensional.
pub fn circular_w2(mu: &CircleMeasure, nu: &CircleMeasure) -> Result<(f64, TransportPlan)> {
    check_normalised(mu)?;
    check_normalised(nu)?;
    let f = Quantile::new(mu);
    let g = Quantile::new(nu);
    let alpha = minimise_shift(&f, &g);

    let mut couplings: Vec<(usize, usize, f64)> = Vec::new();
    let mut cost = 0.0;
    walk(&f, &g, alpha, |i, j, _, m| {
        let (si, tj) = (f.index[i], g.index[j]);
        let d = angular_distance(f.angles[i], g.angles[j]);
        cost += 0.5 * m * d * d;
        match couplings.last_mut() {
            Some(last) if last.0 == si && last.1 == tj => last.2 += m,
            _ => couplings.push((si, tj, m)),
        }
    });
    // The walk is cyclic, so its first and last pieces can share a pair.
    if couplings.len() > 1 {
        let (first, last) = (couplings[0], couplings[couplings.len() - 1]);
        if first.0 == last.0 && first.1 == last.1 {
            couplings[0].2 += last.2;
            couplings.pop();
        }
    }

    let cell = |m: &CircleMeasure| m.n_grid().map_or(0.0, |n| TWO_PI / n as f64);
    let discretization_bound = (cell(mu) + cell(nu)) / 2.0_f64.sqrt();
    let plan = TransportPlan {
        source: mu.clone(),
        target: nu.clone(),
        couplings,
        cost,
        discretization_bound,
    };
    Ok((cost.sqrt(), plan))
}
