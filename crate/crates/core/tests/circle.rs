use circle_tci::circle::{
    entropy_dual_value, fourier_coefficients, grid_angle, log_energy, log_energy_default,
    measured_rho, relative_entropy,
};
use circle_tci::{CircleMeasure, ExtReal, Potential, TWO_PI};
use proptest::prelude::*;

fn density_from(coeffs: &[(f64, f64)], n: usize) -> CircleMeasure {
    let c = coeffs.to_vec();
    CircleMeasure::from_density(n, move |t: f64| {
        c.iter()
            .enumerate()
            .map(|(m, &(a, b))| {
                let k = (m + 1) as f64;
                a * (k * t).cos() + b * (k * t).sin()
            })
            .sum::<f64>()
            .exp()
    })
    .unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.5..1.5f64, -1.5..1.5f64), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_nonnegative_and_zero_on_diagonal(a in coeffs(), b in coeffs()) {
        let mu = density_from(&a, 64);
        let nu = density_from(&b, 64);
        let s = relative_entropy(&mu, &nu).unwrap().finite().unwrap();
        prop_assert!(s >= 0.0);
        prop_assert!(relative_entropy(&mu, &mu).unwrap().finite().unwrap().abs() <= 1e-10);
        if mu != nu {
            let l1: f64 = mu.grid_weights().unwrap().iter().zip(nu.grid_weights().unwrap()).map(|(x, y)| (x - y).abs()).sum();
            // Pinsker: S ≥ ½‖μ − ν‖₁².
            prop_assert!(s >= 0.5 * l1 * l1 - 1e-12);
        }
    }

    #[test]
    fn entropy_dual_is_a_lower_bound(a in coeffs(), b in coeffs(), f in prop::collection::vec(-4.0..4.0f64, 64)) {
        let mu = density_from(&a, 64);
        let nu = density_from(&b, 64);
        let s = relative_entropy(&mu, &nu).unwrap().finite().unwrap();
        prop_assert!(entropy_dual_value(&mu, &nu, &f).unwrap() <= s + 1e-10);
    }

    #[test]
    fn log_energy_nonpositive(a in coeffs()) {
        let mu = density_from(&a, 128);
        match log_energy_default(&mu) {
            ExtReal::Finite(v) => prop_assert!(v <= 0.0),
            other => prop_assert!(false, "unexpected {other:?}"),
        }
    }

    #[test]
    fn fourier_coefficients_are_linear(a in coeffs(), b in coeffs(), t in 0.0..1.0f64) {
        let mu = density_from(&a, 64);
        let nu = density_from(&b, 64);
        let mix = mu.mix(&nu, t).unwrap();
        let (fa, fb, fm) = (fourier_coefficients(&mu, 20), fourier_coefficients(&nu, 20), fourier_coefficients(&mix, 20));
        for k in 0..fm.len() {
            prop_assert!((fm[k] - (fa[k] * (1.0 - t) + fb[k] * t)).norm() < 1e-14);
        }
    }

    #[test]
    fn rho_is_never_positive(terms in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..6), q0 in -2.0..2.0f64) {
        let t: Vec<(usize, f64, f64)> = terms.iter().enumerate().map(|(i, &(a, b))| (i + 1, a, b)).collect();
        let q = Potential::trig(64, q0, &t).unwrap();
        let r = measured_rho(&q);
        prop_assert!(r.rho <= 0.0);
        // Q'' averages to zero, so its minimum is at most its mean.
        let mean: f64 = (0..1000).map(|j| q.derivative(TWO_PI * j as f64 / 1000.0, 2)).sum::<f64>() / 1000.0;
        prop_assert!(r.rho <= mean + 1e-12);
    }

    #[test]
    fn grid_measure_json_roundtrip(a in coeffs()) {
        let mu = density_from(&a, 32);
        let back = CircleMeasure::from_json(&mu.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, mu);
    }
}

#[test]
fn cosine_density_against_uniform_by_fine_quadrature() {
    let n = 1024;
    let mu = CircleMeasure::from_density(n, |t: f64| 1.0 - t.cos()).unwrap();
    let s = relative_entropy(&mu, &CircleMeasure::uniform(n))
        .unwrap()
        .finite()
        .unwrap();
    // Composite Simpson on 2^16 intervals of ∫ρ log(2πρ), ρ = (1 − cos)/2π.
    let m = 1 << 16;
    let h = TWO_PI / m as f64;
    let integrand = |t: f64| {
        let r = (1.0 - t.cos()) / TWO_PI;
        if r > 0.0 {
            r * (TWO_PI * r).ln()
        } else {
            0.0
        }
    };
    let simpson: f64 = (0..=m)
        .map(|j| {
            let w = if j == 0 || j == m {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * integrand(j as f64 * h)
        })
        .sum::<f64>()
        * h
        / 3.0;
    // Closed form 1 − log 2.
    assert!((simpson - (1.0 - 2f64.ln())).abs() < 1e-10);
    assert!((s - simpson).abs() < 1e-8, "{s} vs {simpson}");
}

#[test]
fn cosine_log_energy_by_direct_double_sum() {
    // ∬log|e^{ix} − e^{iy}| ρρ, with the singular part removed using
    // ∫₀^{2π} log|2 sin(t/2)| dt = 0 and the trapezoid rule on 512 points.
    let n = 512;
    let h = TWO_PI / n as f64;
    let rho = |t: f64| (1.0 - t.cos()) / TWO_PI;
    let mut total = 0.0;
    for i in 0..n {
        let x = grid_angle(i, n);
        let mut inner = 0.0;
        for j in 0..n {
            if i != j {
                let y = grid_angle(j, n);
                inner += (rho(y) - rho(x)) * (2.0 * ((x - y) / 2.0).sin()).abs().ln();
            }
        }
        total += rho(x) * inner * h * h;
    }
    assert!((total + 0.25).abs() < 1e-4, "{total}");
    let mu = CircleMeasure::from_density(n, rho).unwrap();
    assert!((log_energy(&mu, n / 2).finite().unwrap() + 0.25).abs() < 1e-12);
    assert_eq!(
        log_energy_default(&CircleMeasure::uniform(64)),
        ExtReal::Finite(0.0)
    );
    assert_eq!(
        log_energy_default(&CircleMeasure::dirac(1.0)),
        ExtReal::NegInf
    );
}

#[test]
fn rho_examples() {
    assert_eq!(measured_rho(&Potential::zero(32)).rho, 0.0);
    for c in [0.2, 0.5, 0.8] {
        let r = measured_rho(&Potential::cos(128, c));
        assert!((r.rho + c).abs() < 1e-13);
        assert_eq!(r.admissible, c < 0.5);
        // Finite-difference check of min Q''.
        let h = 1e-4;
        let q = Potential::cos(128, c);
        let fd = (q.value_at(h) - 2.0 * q.value_at(0.0) + q.value_at(-h)) / (h * h);
        assert!((fd + c).abs() < 1e-6);
    }
    assert!((measured_rho(&Potential::cos(64, 1.0)).rho + 1.0).abs() < 1e-13);
}
