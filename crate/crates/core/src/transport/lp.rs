use super::w2::circular_w2;
use crate::circle::{angular_distance, CircleMeasure};
use crate::{Error, Result};
use serde::Serialize;

/// Optimal Kantorovich potentials for the cost (ρ′/2)d² between two
/// atomic supports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KantorovichDual {
    /// Σ μ_i f_i − Σ ν_j g_j.
    pub value: f64,
    /// Primal optimum of the same program.
    pub primal: f64,
    pub source_angles: Vec<f64>,
    pub target_angles: Vec<f64>,
    /// f at the source atoms.
    pub f: Vec<f64>,
    /// g at the target atoms.
    pub g: Vec<f64>,
    /// max_{ij} (f_i − g_j − (ρ′/2)d²)_+.
    pub constraint_violation: f64,
    pub augmentations: usize,
}

/// Dense transportation problem min Σ c_ij x_ij with row sums a and column
/// sums b, solved by successive shortest paths.
///
/// Nodes: 0 = source hub, 1..=n supply, n+1..=n+m demand, n+m+1 = sink hub.
/// Returns (primal cost, node potentials, flow matrix, augmentations).
fn min_cost_transport(
    a: &[f64],
    b: &[f64],
    cost: &[f64],
) -> Result<(f64, Vec<f64>, Vec<f64>, usize)> {
    let (n, m) = (a.len(), b.len());
    let nodes = n + m + 2;
    let sink = nodes - 1;
    let mut x = vec![0.0; n * m];
    let mut sent = vec![0.0; n];
    let mut recv = vec![0.0; m];
    let mut pot = vec![0.0; nodes];
    let target: f64 = a.iter().sum::<f64>().min(b.iter().sum());
    let mut flow = 0.0;
    let mut augmentations = 0;
    let eps = 1e-15;

    // Residual arcs out of node u as (v, cost, capacity).
    let arcs =
        |u: usize, x: &[f64], sent: &[f64], recv: &[f64], out: &mut Vec<(usize, f64, f64)>| {
            out.clear();
            if u == 0 {
                for i in 0..n {
                    if a[i] - sent[i] > eps {
                        out.push((1 + i, 0.0, a[i] - sent[i]));
                    }
                }
            } else if u <= n {
                let i = u - 1;
                if sent[i] > eps {
                    out.push((0, 0.0, sent[i]));
                }
                for j in 0..m {
                    out.push((n + 1 + j, cost[i * m + j], f64::INFINITY));
                }
            } else if u < sink {
                let j = u - n - 1;
                for i in 0..n {
                    if x[i * m + j] > eps {
                        out.push((1 + i, -cost[i * m + j], x[i * m + j]));
                    }
                }
                if b[j] - recv[j] > eps {
                    out.push((sink, 0.0, b[j] - recv[j]));
                }
            } else {
                for (j, &r) in recv.iter().enumerate().take(m) {
                    if r > eps {
                        out.push((n + 1 + j, 0.0, r));
                    }
                }
            }
        };

    let mut buf = Vec::new();
    while target - flow > 1e-14 {
        // Dense Dijkstra on reduced costs.
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev = vec![usize::MAX; nodes];
        let mut done = vec![false; nodes];
        dist[0] = 0.0;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            arcs(u, &x, &sent, &recv, &mut buf);
            for &(v, c, _) in &buf {
                let nd = dist[u] + (c + pot[u] - pot[v]).max(0.0);
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                }
            }
        }
        if !dist[sink].is_finite() {
            return Err(Error::Constraint(
                "transport problem has no feasible augmenting path".into(),
            ));
        }
        let reach_max = dist
            .iter()
            .copied()
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max);
        for v in 0..nodes {
            pot[v] += if dist[v].is_finite() {
                dist[v]
            } else {
                reach_max
            };
        }

        // Bottleneck along the path.
        let mut path = vec![sink];
        while *path.last().unwrap() != 0 {
            path.push(prev[*path.last().unwrap()]);
        }
        path.reverse();
        let mut delta = target - flow;
        for w in path.windows(2) {
            arcs(w[0], &x, &sent, &recv, &mut buf);
            let cap = buf.iter().find(|e| e.0 == w[1]).map(|e| e.2).unwrap_or(0.0);
            delta = delta.min(cap);
        }
        for w in path.windows(2) {
            let (u, v) = (w[0], w[1]);
            if u == 0 {
                sent[v - 1] += delta;
            } else if v == 0 {
                sent[u - 1] -= delta;
            } else if v == sink {
                recv[u - n - 1] += delta;
            } else if u == sink {
                recv[v - n - 1] -= delta;
            } else if u <= n {
                x[(u - 1) * m + (v - n - 1)] += delta;
            } else {
                let k = (v - 1) * m + (u - n - 1);
                x[k] -= delta;
                if x[k] < eps {
                    x[k] = 0.0;
                }
            }
        }
        flow += delta;
        augmentations += 1;
        if augmentations > 100 * (n + m) * (n + m) {
            return Err(Error::NonConvergence {
                iterations: augmentations,
                gap: target - flow,
            });
        }
    }
    let primal = x.iter().zip(cost).map(|(xi, c)| xi * c).sum();
    Ok((primal, pot, x, augmentations))
}

/// Solve sup{Σμ_i f_i − Σν_j g_j : f_i ≤ g_j + (ρ′/2)d(x_i,y_j)²} exactly at
/// finite support.
pub fn kantorovich_dual(
    mu: &CircleMeasure,
    nu: &CircleMeasure,
    rho_prime: f64,
) -> Result<KantorovichDual> {
    if !(rho_prime > 0.0 && rho_prime.is_finite()) {
        return Err(Error::Domain(format!(
            "rho' must be positive, got {rho_prime}"
        )));
    }
    // Reject unnormalised inputs the same way the primal solver does.
    circular_w2(mu, nu)?;
    let src = mu.to_atoms();
    let dst = nu.to_atoms();
    let a: Vec<f64> = src.iter().map(|t| t.mass).collect();
    let b: Vec<f64> = dst.iter().map(|t| t.mass).collect();
    let (n, m) = (a.len(), b.len());
    let cost: Vec<f64> = (0..n * m)
        .map(|k| 0.5 * rho_prime * angular_distance(src[k / m].angle, dst[k % m].angle).powi(2))
        .collect();
    let (primal, pot, _, augmentations) = min_cost_transport(&a, &b, &cost)?;

    // Reduced costs c_ij + π_i − π_j ≥ 0, so f_i = −π_i and g_j = −π_j work.
    let shift = pot[1];
    let f: Vec<f64> = (0..n).map(|i| shift - pot[1 + i]).collect();
    let g: Vec<f64> = (0..m).map(|j| shift - pot[n + 1 + j]).collect();
    let mut violation: f64 = 0.0;
    for i in 0..n {
        for j in 0..m {
            violation = violation.max(f[i] - g[j] - cost[i * m + j]);
        }
    }
    let value = a.iter().zip(&f).map(|(x, y)| x * y).sum::<f64>()
        - b.iter().zip(&g).map(|(x, y)| x * y).sum::<f64>();
    Ok(KantorovichDual {
        value,
        primal,
        source_angles: src.iter().map(|t| t.angle).collect(),
        target_angles: dst.iter().map(|t| t.angle).collect(),
        f,
        g,
        constraint_violation: violation.max(0.0),
        augmentations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{PI, TWO_PI};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_diracs() {
        let d = kantorovich_dual(
            &CircleMeasure::dirac(0.0),
            &CircleMeasure::dirac(PI / 2.0),
            1.0,
        )
        .unwrap();
        assert!((d.value - PI * PI / 8.0).abs() < 1e-14);
        assert_eq!(d.constraint_violation, 0.0);
    }

    #[test]
    fn identical_is_zero() {
        let mu = CircleMeasure::equal_atoms(&[0.5, 1.5, 4.0]).unwrap();
        let d = kantorovich_dual(&mu, &mu, 2.0).unwrap();
        assert!(d.value.abs() < 1e-15);
    }

    #[test]
    fn strong_duality_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &rp in &[0.2, 1.0, 3.0] {
            for _ in 0..5 {
                let n = rng.random_range(2..=12);
                let m = rng.random_range(2..=12);
                let mk = |rng: &mut ChaCha8Rng, k: usize| {
                    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
                    let s: f64 = w.iter().sum();
                    CircleMeasure::atomic(
                        w.iter()
                            .map(|x| crate::circle::Atom {
                                angle: rng.random_range(0.0..TWO_PI),
                                mass: x / s,
                            })
                            .collect(),
                    )
                    .unwrap()
                };
                let mu = mk(&mut rng, n);
                let nu = mk(&mut rng, m);
                let d = kantorovich_dual(&mu, &nu, rp).unwrap();
                let (w, _) = circular_w2(&mu, &nu).unwrap();
                assert!(
                    (d.value - rp * w * w).abs() < 1e-10,
                    "{} vs {}",
                    d.value,
                    rp * w * w
                );
                assert!((d.primal - d.value).abs() < 1e-12);
                assert!(d.constraint_violation < 1e-12);
            }
        }
    }
}
