//! Volume distortion coefficients and the one-dimensional Prékopa–Leindler
//! inequality on the circle.
//!
//! S_k(d) is sin(√k d)/(√k d), 1 or sinh(√−k d)/(√−k d) according to the sign
//! of k, and log S_k(d) = −Σ_j c_j (kd²)^j with c_j = ζ(2j)/(jπ^{2j}).

use crate::circle::{wrap_positive, wrap_signed, CircleFunction, PI, TWO_PI};
use crate::{Error, Result};
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

/// Relative slack on the diameter bound d ≤ π/√k.
const DIAMETER_SLACK: f64 = 1e-12;

/// S_k(d), continuous in (k, d) with S_k(0) = 1.
pub fn s_k(k: f64, d: f64) -> Result<f64> {
    if d.is_nan() || d < 0.0 || !k.is_finite() || !d.is_finite() {
        return Err(Error::Domain(format!("invalid (k, d) = ({k}, {d})")));
    }
    if k == 0.0 || d == 0.0 {
        return Ok(1.0);
    }
    let x = k.abs().sqrt() * d;
    if k > 0.0 {
        if x > PI * (1.0 + DIAMETER_SLACK) {
            return Err(Error::Domain(format!(
                "d = {d} exceeds the diameter bound π/√k for k = {k}"
            )));
        }
        if x < 1e-4 {
            let x2 = x * x;
            return Ok(1.0 - x2 / 6.0 + x2 * x2 / 120.0);
        }
        Ok((x.sin() / x).max(0.0))
    } else {
        if x < 1e-4 {
            let x2 = x * x;
            return Ok(1.0 + x2 / 6.0 + x2 * x2 / 120.0);
        }
        Ok(x.sinh() / x)
    }
}

/// ζ(s) for integer s ≥ 2 by direct summation with an Euler–Maclaurin tail.
pub fn zeta(s: u32) -> f64 {
    assert!(s >= 2, "zeta needs s >= 2");
    const M: usize = 1000;
    let sf = s as f64;
    let mut sum = 0.0;
    for m in (1..=M).rev() {
        sum += (m as f64).powf(-sf);
    }
    // Σ_{m>M} m^{−s} = ∫_M^∞ x^{−s}dx − M^{−s}/2 − Σ_p B_{2p}/(2p)! f^{(2p−1)}(M).
    let mf = M as f64;
    let f = mf.powf(-sf);
    let integral = mf * f / (sf - 1.0);
    let d1 = -sf * f / mf;
    let d3 = -sf * (sf + 1.0) * (sf + 2.0) * f / mf.powi(3);
    let d5 = -sf * (sf + 1.0) * (sf + 2.0) * (sf + 3.0) * (sf + 4.0) * f / mf.powi(5);
    let tail = integral - f / 2.0 - d1 / 12.0 + d3 / 720.0 - d5 / 30240.0;
    sum + tail
}

/// c_1, …, c_J of log S_k(d) = −Σ c_j (kd²)^j.
pub fn taylor_coefficients(j_max: usize) -> Vec<f64> {
    (1..=j_max)
        .map(|j| zeta(2 * j as u32) / (j as f64 * PI.powi(2 * j as i32)))
        .collect()
}

/// −Σ_{j≤J} c_j (kd²)^j.
pub fn log_s_k_series(coeffs: &[f64], k: f64, d: f64) -> f64 {
    let x = k * d * d;
    let mut acc = 0.0;
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    -acc * x
}

/// Parameters of the distortion estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkParams {
    pub k: f64,
    pub n: usize,
    pub theta: f64,
    pub d: f64,
}

impl SkParams {
    pub fn new(k: f64, n: usize, theta: f64, d: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::Domain(format!(
                "theta must lie in (0,1), got {theta}"
            )));
        }
        if d.is_nan() || d < 0.0 {
            return Err(Error::Domain(format!(
                "distance must be nonnegative, got {d}"
            )));
        }
        if k > 0.0 && k.sqrt() * d > PI * (1.0 + DIAMETER_SLACK) {
            return Err(Error::Domain(format!("d = {d} exceeds π/√k for k = {k}")));
        }
        Ok(SkParams { k, n, theta, d })
    }

    /// Parameters with k = α/(n−1), the curvature matching Ric ≥ α.
    pub fn from_ricci(alpha: f64, n: usize, theta: f64, d: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain("Ricci parametrisation needs n >= 2".into()));
        }
        SkParams::new(alpha / (n - 1) as f64, n, theta, d)
    }

    /// Diameter bound π/√k for k > 0, infinite otherwise.
    pub fn diameter(k: f64) -> f64 {
        if k > 0.0 {
            PI / k.sqrt()
        } else {
            f64::INFINITY
        }
    }
}

/// Φ_θ(d) = (n−1)(log S_k(d) − (1−θ)log S_k((1−θ)d) − θ log S_k(θd)).
pub fn phi_theta(p: &SkParams) -> Result<f64> {
    if p.n == 1 {
        return Ok(0.0);
    }
    let ln = |x: f64| -> Result<f64> { Ok(s_k(p.k, x)?.ln()) };
    let t = p.theta;
    let v = ln(p.d)? - (1.0 - t) * ln((1.0 - t) * p.d)? - t * ln(t * p.d)?;
    Ok((p.n - 1) as f64 * v)
}

/// −(αθ(1−θ)/2)d² with α = (n−1)k.
pub fn phi_bound(p: &SkParams) -> f64 {
    let alpha = (p.n.saturating_sub(1)) as f64 * p.k;
    -alpha * p.theta * (1.0 - p.theta) * p.d * p.d / 2.0
}

/// One row of a Φ_θ sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiSweepRow {
    pub n: usize,
    pub alpha: f64,
    pub theta: f64,
    pub d: f64,
    pub value: f64,
    pub bound: f64,
    /// bound − value; nonnegative when the estimate holds.
    pub margin: f64,
}

/// Evaluate Φ_θ against its quadratic bound over a product of parameters.
/// Distances are `d_steps` points in (0, π/√k].
pub fn phi_sweep(
    ns: &[usize],
    alphas: &[f64],
    thetas: &[f64],
    d_steps: usize,
) -> Result<Vec<PhiSweepRow>> {
    let mut rows = Vec::new();
    for &n in ns {
        for &alpha in alphas {
            let k = alpha / (n - 1) as f64;
            let diam = SkParams::diameter(k);
            for &theta in thetas {
                for s in 1..=d_steps {
                    let d = diam * s as f64 / d_steps as f64;
                    let p = SkParams::from_ricci(alpha, n, theta, d)?;
                    let value = phi_theta(&p)?;
                    let bound = phi_bound(&p);
                    rows.push(PhiSweepRow {
                        n,
                        alpha,
                        theta,
                        d,
                        value,
                        bound,
                        margin: bound - value,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Write sweep rows as CSV with a header.
pub fn write_sweep_csv<W: Write>(rows: &[PhiSweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Direction of travel from x for antipodal pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// Increasing angle.
    Counterclockwise,
    /// Decreasing angle.
    Clockwise,
}

/// The point z with d(x,z) = θd(x,y) on the minimal geodesic from x to y.
pub fn geodesic_point(x: f64, y: f64, theta: f64, branch: Option<Branch>) -> Result<f64> {
    let mut disp = wrap_signed(y - x);
    if (disp.abs() - PI).abs() <= 1e-12 {
        disp = match branch {
            Some(Branch::Counterclockwise) => PI,
            Some(Branch::Clockwise) => -PI,
            None => {
                return Err(Error::Ambiguous(format!(
                    "angles {x} and {y} are antipodal; a branch is required"
                )))
            }
        };
    }
    Ok(wrap_positive(x + theta * disp))
}

/// R_θ(z;x,y) = Q(z) − (1−θ)Q(x) − θQ(y) with z the geodesic θ-point.
pub fn r_theta_circle(
    q: &impl CircleFunction,
    x: f64,
    y: f64,
    theta: f64,
    branch: Option<Branch>,
) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!(
            "theta must lie in (0,1), got {theta}"
        )));
    }
    let z = geodesic_point(x, y, theta, branch)?;
    Ok(q.eval(z) - (1.0 - theta) * q.eval(x) - theta * q.eval(y))
}

/// Outcome of the brute-force Prékopa–Leindler check on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlReport {
    pub theta: f64,
    /// ∫h for the minimal admissible h.
    pub lhs: f64,
    /// (∫f)^{1−θ}(∫g)^θ.
    pub rhs: f64,
    pub holds: bool,
    /// (∫f)^θ(∫g)^{1−θ}, the ordering with exchanged exponents.
    pub rhs_swapped: f64,
    pub holds_swapped: bool,
    pub margin: f64,
}

#[derive(PartialEq)]
struct HeapVal(f64);

impl Eq for HeapVal {}

impl PartialOrd for HeapVal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapVal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// ∫ of the upper envelope of values on intervals [a, b) ⊂ [0, 2π).
fn envelope_integral(intervals: &[(f64, f64, f64)]) -> f64 {
    // Events: (position, is_start, interval id).
    let mut events: Vec<(f64, bool, usize)> = Vec::with_capacity(2 * intervals.len());
    for (id, &(a, b, _)) in intervals.iter().enumerate() {
        events.push((a, true, id));
        events.push((b, false, id));
    }
    events.sort_by(|p, q| p.0.total_cmp(&q.0).then(q.1.cmp(&p.1)));
    let mut heap: BinaryHeap<(HeapVal, usize)> = BinaryHeap::new();
    let mut alive = vec![false; intervals.len()];
    let mut total = 0.0;
    let mut last = 0.0;
    for (pos, start, id) in events {
        while let Some((_, top)) = heap.peek() {
            if alive[*top] {
                break;
            }
            heap.pop();
        }
        if let Some((v, _)) = heap.peek() {
            total += v.0 * (pos - last);
        }
        last = pos;
        if start {
            alive[id] = true;
            heap.push((HeapVal(intervals[id].2), id));
        } else {
            alive[id] = false;
        }
    }
    total
}

/// Brute-force check of ∫h ≥ (∫f)^{1−θ}(∫g)^θ on the circle with the
/// normalised measure dx/2π.
///
/// f and g are taken piecewise constant on the cells centred at the grid
/// angles, and h is the smallest function with h(z) ≥ f(x)^{1−θ}g(y)^θ
/// whenever z is a geodesic θ-point of (x, y). For cells i and j the
/// θ-points of all pairs fill an interval of one cell width centred at
/// θ_i + θ·sΔ, s the signed index offset; antipodal offsets use both arcs.
pub fn pl_verify_circle(f: &[f64], g: &[f64], theta: f64) -> Result<PlReport> {
    let n = f.len();
    if n == 0 || g.len() != n {
        return Err(Error::Dimension(n, g.len()));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!(
            "theta must lie in (0,1), got {theta}"
        )));
    }
    if f.iter().chain(g).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Domain(
            "f and g must be finite and nonnegative".into(),
        ));
    }
    let delta = TWO_PI / n as f64;
    let fp: Vec<f64> = f.iter().map(|v| v.powf(1.0 - theta)).collect();
    let gp: Vec<f64> = g.iter().map(|v| v.powf(theta)).collect();
    let mut intervals = Vec::with_capacity(n * n + n);
    let mut push = |centre: f64, value: f64| {
        let a = wrap_positive(centre - delta / 2.0);
        let b = a + delta;
        if b <= TWO_PI {
            intervals.push((a, b, value));
        } else {
            intervals.push((a, TWO_PI, value));
            intervals.push((0.0, b - TWO_PI, value));
        }
    };
    for (i, &fi) in fp.iter().enumerate() {
        if fi == 0.0 {
            continue;
        }
        let xi = delta * i as f64;
        for (j, &gj) in gp.iter().enumerate() {
            let value = fi * gj;
            if value == 0.0 {
                continue;
            }
            let mut s = (j + n - i) % n;
            if 2 * s > n {
                s = s.wrapping_sub(n);
            }
            let offset = (s as isize) as f64 * delta;
            if 2 * ((j + n - i) % n) == n {
                push(xi + theta * PI, value);
                push(xi - theta * PI, value);
            } else {
                push(xi + theta * offset, value);
            }
        }
    }
    let lhs = envelope_integral(&intervals) / TWO_PI;
    let int_f = f.iter().sum::<f64>() / n as f64;
    let int_g = g.iter().sum::<f64>() / n as f64;
    let rhs = int_f.powf(1.0 - theta) * int_g.powf(theta);
    let rhs_swapped = int_f.powf(theta) * int_g.powf(1.0 - theta);
    let tol = 1e-12 * rhs.max(1.0);
    Ok(PlReport {
        theta,
        lhs,
        rhs,
        holds: lhs >= rhs - tol,
        rhs_swapped,
        holds_swapped: lhs >= rhs_swapped - 1e-12 * rhs_swapped.max(1.0),
        margin: lhs - rhs,
    })
}
