//! Closed forms checked against brute-force Fock-space computations.

use num_complex::Complex64;
use qbell_core::numerics::expectation;
use qbell_core::{
    build_pure_state, build_thermal_state, fef_closed_form, g1, g23, gram_matrix, helstrom_error,
    numeric_gram_matrix, BinaryEnsemble, DensityMatrix, QuasiBellLabel, ThermalParameter,
    TruncationSpec,
};

fn th(x: f64) -> ThermalParameter {
    ThermalParameter::new(x).unwrap()
}

/// `exp(theta (a^dagger b^dagger - a b)) |beta, 0>` on a `(cutoff+1)^2` grid,
/// by scaled Taylor steps.
fn thermalize_by_expm(beta: Complex64, theta: f64, cutoff: usize) -> Vec<Complex64> {
    let d = cutoff + 1;
    let idx = |k2: usize, k3: usize| k2 * d + k3;
    let apply = |v: &[Complex64], scale: f64| -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for k2 in 0..d {
            for k3 in 0..d {
                let mut z = Complex64::new(0.0, 0.0);
                if k2 > 0 && k3 > 0 {
                    z += v[idx(k2 - 1, k3 - 1)] * ((k2 * k3) as f64).sqrt();
                }
                if k2 < cutoff && k3 < cutoff {
                    z -= v[idx(k2 + 1, k3 + 1)] * (((k2 + 1) * (k3 + 1)) as f64).sqrt();
                }
                out[idx(k2, k3)] = z * scale;
            }
        }
        out
    };
    let mut state = vec![Complex64::new(0.0, 0.0); d * d];
    for k2 in 0..d {
        state[idx(k2, 0)] = g1(beta, k2);
    }
    let steps = 64;
    let h = theta / steps as f64;
    for _ in 0..steps {
        let mut term = state.clone();
        for n in 1..60 {
            term = apply(&term, h / n as f64);
            let size: f64 = term.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for (s, t) in state.iter_mut().zip(&term) {
                *s += t;
            }
            if size < 1e-20 {
                break;
            }
        }
    }
    state
}

#[test]
fn thermal_kernel_matches_matrix_exponential() {
    // Stronger noise pushes weight toward the grid edge, so it gets a wider grid.
    for (beta, theta, cutoff) in [
        (Complex64::new(1.0, 0.0), 0.5, 40),
        (Complex64::new(0.8, 0.6), 0.9, 80),
        (Complex64::new(-1.3, 0.2), 0.3, 40),
        (Complex64::new(2.0, 0.0), 0.0, 40),
        (Complex64::new(1.5, -0.5), 1.2, 100),
    ] {
        let state = thermalize_by_expm(beta, theta, cutoff);
        let mut worst = 0.0_f64;
        for k2 in 0..=25 {
            for k3 in 0..=25 {
                let reference = state[k2 * (cutoff + 1) + k3];
                worst = worst.max((g23(beta, k2, k3, th(theta)) - reference).norm());
            }
        }
        assert!(worst <= 1e-8, "beta {beta} theta {theta}: {worst:e}");
    }
}

fn fidelity_by_quadratic_form(alpha: f64, beta: f64, theta: f64, tol: f64) -> f64 {
    let t = TruncationSpec::fitted(Complex64::new(beta, 0.0), th(theta), tol)
        .unwrap()
        .union(
            &TruncationSpec::fitted(Complex64::new(alpha, 0.0), ThermalParameter::ZERO, tol)
                .unwrap(),
        );
    let rho = build_thermal_state(
        QuasiBellLabel::Phi2,
        Complex64::new(beta, 0.0),
        th(theta),
        t,
    )
    .unwrap();
    let psi = build_pure_state(QuasiBellLabel::Phi2, Complex64::new(alpha, 0.0), t).unwrap();
    expectation(&rho, &psi).unwrap()
}

#[test]
fn fef_closed_form_matches_quadratic_form() {
    for (alpha, beta, theta) in [
        (1.0, 1.0, 0.0),
        (0.9, 1.0, 0.4),
        (2.2, 1.7, 0.8),
        (0.3, 2.5, 0.2),
        (1e-4, 0.6, 0.5),
    ] {
        let closed = fef_closed_form(alpha, beta, th(theta)).unwrap();
        let brute = fidelity_by_quadratic_form(alpha, beta, theta, 1e-10);
        assert!(
            (closed - brute).abs() <= 1e-8,
            "({alpha}, {beta}, {theta}): {closed} vs {brute}"
        );
    }
}

#[test]
fn gram_matrix_matches_fock_inner_products() {
    for beta in [0.3, 1.0, 1.8, 3.0] {
        let b = Complex64::new(beta, 0.0);
        let t = TruncationSpec::fitted(b, ThermalParameter::ZERO, 1e-12).unwrap();
        let analytic = gram_matrix(b).unwrap();
        let numeric = numeric_gram_matrix(b, t).unwrap();
        for x in QuasiBellLabel::ALL {
            for y in QuasiBellLabel::ALL {
                assert!(
                    (analytic.get(x, y) - numeric.get(x, y)).norm() <= 1e-10,
                    "{x} {y} at {beta}"
                );
            }
        }
    }
}

#[test]
fn helstrom_on_pure_pairs_matches_overlap_formula() {
    // Two pure states with a known overlap, at uneven and even priors.
    let t = TruncationSpec::new(40, 40, 1e-8).unwrap();
    let p = |l, b: f64| build_pure_state(l, Complex64::new(b, 0.0), t).unwrap();
    let (a, b) = (p(QuasiBellLabel::Phi1, 1.0), p(QuasiBellLabel::Phi1, 1.2));
    let overlap = a.inner(&b).unwrap();
    let (ra, rb) = (DensityMatrix::from_pure(&a), DensityMatrix::from_pure(&b));
    for prior in [0.3, 0.5] {
        let e = helstrom_error(&BinaryEnsemble::new(&ra, &rb, prior).unwrap()).unwrap();
        let expected =
            0.5 * (1.0 - (1.0 - 4.0 * prior * (1.0 - prior) * overlap.norm_sqr()).sqrt());
        assert!(
            (e.value() - expected).abs() <= 1e-10,
            "prior {prior}: {} vs {expected}",
            e.value()
        );
    }
}
