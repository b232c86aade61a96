use crate::circle::{angular_distance, grid_angle, CircleFunction, TWO_PI};

/// Largest value of f(ζ_i) − g(η_j) − (ρ′/2)d(ζ_i,η_j)² over the grid product,
/// clamped at zero. `f` and `g` may live on grids of different sizes.
pub fn dual_pair_violation(f: &[f64], g: &[f64], rho_prime: f64) -> f64 {
    let (n, m) = (f.len(), g.len());
    let mut worst: f64 = 0.0;
    for (i, fi) in f.iter().enumerate() {
        let x = grid_angle(i, n);
        for (j, gj) in g.iter().enumerate() {
            let d = angular_distance(x, grid_angle(j, m));
            worst = worst.max(fi - gj - 0.5 * rho_prime * d * d);
        }
    }
    worst
}

/// Whether f(ζ) ≤ g(η) + (ρ′/2)d(ζ,η)² holds on the grid product up to 1e-12.
pub fn dual_pair_check(f: &[f64], g: &[f64], rho_prime: f64) -> bool {
    dual_pair_violation(f, g, rho_prime) <= 1e-12
}

/// f_i = min_j g_j + (ρ′/2)d(θ_i,θ_j)² by direct minimisation.
pub fn inf_convolution_grid(g: &[f64], rho_prime: f64) -> Vec<f64> {
    let n = g.len();
    (0..n)
        .map(|i| {
            let x = grid_angle(i, n);
            g.iter()
                .enumerate()
                .map(|(j, gj)| {
                    let d = angular_distance(x, grid_angle(j, n));
                    gj + 0.5 * rho_prime * d * d
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// The continuous inf-convolution θ ↦ inf_η g(η) + c·d(θ,η)².
///
/// Evaluated by a scan over `scan` points followed by golden-section
/// refinement around the best few scan minima; the result is within
/// refinement tolerance of the true infimum for smooth g.
#[derive(Debug, Clone)]
pub struct QuadraticInfConvolution<G> {
    pub g: G,
    pub c: f64,
    pub scan: usize,
}

impl<G: CircleFunction> QuadraticInfConvolution<G> {
    pub fn new(g: G, c: f64) -> Self {
        QuadraticInfConvolution { g, c, scan: 512 }
    }

    fn objective(&self, theta: f64, eta: f64) -> f64 {
        let d = angular_distance(theta, eta);
        self.g.eval(eta) + self.c * d * d
    }
}

impl<G: CircleFunction> CircleFunction for QuadraticInfConvolution<G> {
    fn eval(&self, theta: f64) -> f64 {
        let n = self.scan.max(8);
        let h = TWO_PI / n as f64;
        let vals: Vec<f64> = (0..n)
            .map(|j| self.objective(theta, theta + j as f64 * h))
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
        let mut best = vals[order[0]];
        for &j in order.iter().take(4) {
            let centre = theta + j as f64 * h;
            let (mut lo, mut hi) = (centre - h, centre + h);
            let mut x1 = hi - phi * (hi - lo);
            let mut x2 = lo + phi * (hi - lo);
            let mut c1 = self.objective(theta, x1);
            let mut c2 = self.objective(theta, x2);
            while hi - lo > 1e-12 {
                if c1 <= c2 {
                    hi = x2;
                    x2 = x1;
                    c2 = c1;
                    x1 = hi - phi * (hi - lo);
                    c1 = self.objective(theta, x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    c1 = c2;
                    x2 = lo + phi * (hi - lo);
                    c2 = self.objective(theta, x2);
                }
            }
            best = best.min(c1).min(c2);
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_pairs() {
        let z = vec![0.0; 16];
        assert!(dual_pair_check(&z, &z, 1.0));
        let shifted = vec![0.1; 16];
        assert!(!dual_pair_check(&shifted, &z, 1.0));
    }

    #[test]
    fn inf_convolution_is_tight() {
        let n = 64;
        let g: Vec<f64> = (0..n).map(|j| (grid_angle(j, n) * 2.0).sin()).collect();
        let f = inf_convolution_grid(&g, 0.7);
        assert!(dual_pair_check(&f, &g, 0.7));
        // Equality attained at ζ = η = θ_0's minimiser.
        let tight = (0..n).any(|j| {
            let d = angular_distance(0.0, grid_angle(j, n));
            (f[0] - g[j] - 0.35 * d * d).abs() < 1e-15
        });
        assert!(tight);
        let bumped: Vec<f64> = f.iter().map(|x| x + 1e-9).collect();
        assert!(!dual_pair_check(&bumped, &g, 0.7));
        assert!(f.iter().zip(&g).all(|(a, b)| a <= b));
    }

    #[test]
    fn continuous_matches_grid() {
        let g = |t: f64| t.cos() + 0.3 * (3.0 * t).sin();
        let conv = QuadraticInfConvolution::new(g, 0.4);
        let n = 2048;
        let grid: Vec<f64> = (0..n).map(|j| g(grid_angle(j, n))).collect();
        let fg = inf_convolution_grid(&grid, 0.8);
        for i in (0..n).step_by(97) {
            let v = conv.eval(grid_angle(i, n));
            assert!(v <= fg[i] + 1e-12);
            assert!(fg[i] - v < 1e-5);
        }
    }
}
