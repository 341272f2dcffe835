use num_complex::Complex64;
use proptest::prelude::*;
use qbell_core::commands::parse_grid;
use qbell_core::discrimination::symmetry_deviation;
use qbell_core::{
    apply_mode2_pi_rotation, build_thermal_state, fef_closed_form, g1, g23, helstrom_error,
    maximize_fef, pure_minimax_error, BinaryEnsemble, DensityMatrix, FefSearch, QuasiBellLabel,
    ThermalParameter, TruncationSpec,
};

fn th(x: f64) -> ThermalParameter {
    ThermalParameter::new(x).unwrap()
}

fn state(label: QuasiBellLabel, beta: f64, theta: f64) -> DensityMatrix {
    let b = Complex64::new(beta, 0.0);
    let t = TruncationSpec::heuristic(b, th(theta), 1e-8)
        .unwrap()
        .union(&TruncationSpec::fitted(b, th(theta), 1e-8).unwrap());
    build_thermal_state(label, b, th(theta), t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kernels_conserve_probability(re in -2.0..2.0f64, im in -2.0..2.0f64, theta in 0.0..1.0f64) {
        let b = Complex64::new(re, im);
        let t = TruncationSpec::fitted(b, th(theta), 1e-12).unwrap();
        let m1: f64 = (0..=t.n1_max).map(|k| g1(b, k).norm_sqr()).sum();
        let m2: f64 = (0..=t.n2_max)
            .flat_map(|k2| (0..=k2).map(move |k3| (k2, k3)))
            .map(|(k2, k3)| g23(b, k2, k3, th(theta)).norm_sqr())
            .sum();
        prop_assert!((1.0 - 1e-12..=1.0 + 1e-12).contains(&m1));
        prop_assert!((1.0 - 1e-12..=1.0 + 1e-12).contains(&m2));
    }

    #[test]
    fn rotation_and_helstrom_invariants(beta in 0.3..1.5f64, theta in 0.0..0.8f64, prior in 0.05..0.95f64) {
        let r1 = state(QuasiBellLabel::Phi1, beta, theta);
        let r2 = state(QuasiBellLabel::Phi2, beta, theta);
        let r3 = state(QuasiBellLabel::Phi3, beta, theta);
        prop_assert!(symmetry_deviation(&r3, &r1).unwrap() <= 1e-10);
        prop_assert!(r1.purity() <= 1.0 + 1e-12);

        let e = helstrom_error(&BinaryEnsemble::new(&r1, &r2, prior).unwrap()).unwrap().value();
        let swapped = helstrom_error(&BinaryEnsemble::new(&r2, &r1, 1.0 - prior).unwrap()).unwrap().value();
        prop_assert!((e - swapped).abs() <= 1e-12);
        prop_assert!(e <= prior.min(1.0 - prior) + 1e-12);

        let (q1, q2) = (apply_mode2_pi_rotation(&r1), apply_mode2_pi_rotation(&r2));
        let rotated = helstrom_error(&BinaryEnsemble::new(&q1, &q2, prior).unwrap()).unwrap().value();
        prop_assert!((e - rotated).abs() <= 1e-10);
    }

    #[test]
    fn fef_is_a_fidelity(alpha in 0.05..3.0f64, beta in 0.2..3.0f64, theta in 0.0..1.5f64) {
        let f = fef_closed_form(alpha, beta, th(theta)).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
    }

    // At fixed alpha noise can raise the overlap; the optimum over alpha cannot.
    #[test]
    fn optimal_fef_decays_with_noise(beta in 0.2..3.0f64, t0 in 0.0..1.0f64, dt in 0.0..0.5f64) {
        let f0 = maximize_fef(beta, th(t0), FefSearch::default()).unwrap().value;
        let f1 = maximize_fef(beta, th(t0 + dt), FefSearch::default()).unwrap().value;
        prop_assert!(f1 <= f0 + 1e-12, "{} > {}", f1, f0);
    }

    #[test]
    fn pure_error_is_monotone_in_overlap(a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let e_lo = pure_minimax_error(Complex64::new(lo, 0.0)).unwrap().value();
        let e_hi = pure_minimax_error(Complex64::from_polar(hi, 0.7)).unwrap().value();
        prop_assert!(e_lo <= e_hi + 1e-15);
        prop_assert!((0.0..=0.5).contains(&e_hi));
    }

    #[test]
    fn grids_hit_both_ends(lo in 0.0..5.0f64, span in 0.0..5.0f64, n in 2usize..50) {
        let g = parse_grid(&format!("{lo}:{}:{n}", lo + span)).unwrap();
        prop_assert_eq!(g.len(), n);
        prop_assert!((g[0] - lo).abs() <= 1e-11 * (1.0 + lo));
        prop_assert!((g[n - 1] - (lo + span)).abs() <= 1e-11 * (1.0 + lo + span));
        prop_assert!(g.windows(2).all(|w| w[0] <= w[1]));
    }
}
