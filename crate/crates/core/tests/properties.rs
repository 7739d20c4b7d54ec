use std::f64::consts::{FRAC_PI_2, PI};

use gmnl_core::bell::{certify, CertifyOptions};
use gmnl_core::gme::{c_coefficients, first_party_separability, gme_check, margins_at, poly_eval, DEFAULT_PURITY_TOL};
use gmnl_core::hardy::{annihilator, hardy_vectors, orthocomplement, residual_coeffs};
use gmnl_core::oracle::{dense_residual, schmidt_two_qubit, verify_pipeline};
use gmnl_core::state::{biseparable, random_near_symmetric};
use gmnl_core::{Amplitude, Bra, NearSymmetricState};
use num_complex::Complex64;
use proptest::prelude::*;

fn amplitude() -> impl Strategy<Value = Amplitude> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

/// Any normalizable near-symmetric state with 3..=7 parties.
fn state() -> impl Strategy<Value = NearSymmetricState> {
    (3usize..=7)
        .prop_flat_map(|n| (prop::collection::vec(amplitude(), n), prop::collection::vec(amplitude(), n)))
        .prop_filter_map("zero vector", |(h, hp)| NearSymmetricState::from_unnormalized(h, hp).ok())
}

fn angle() -> impl Strategy<Value = f64> {
    (0.0..PI).prop_filter("tan pole", |a| (a - FRAC_PI_2).abs() > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn closed_form_residual_matches_dense(s in state(), alpha in angle()) {
        let closed = residual_coeffs(&s, alpha);
        let dense = dense_residual(&s, alpha);
        for (x, y) in closed.b.iter().zip(&dense) {
            prop_assert!((x - y).norm() < 1e-12);
        }
        let det = dense[0] * dense[3] - dense[1] * dense[2];
        prop_assert!((poly_eval(&c_coefficients(&s), alpha).unwrap() - det).norm() < 1e-11);
    }

    #[test]
    fn biseparable_states_are_flagged(
        n in 3usize..=7,
        lambda in amplitude(),
        seed in any::<u64>(),
    ) {
        let hp = random_near_symmetric(n, seed).unwrap().h_prime().to_vec();
        prop_assume!(hp.iter().any(|z| z.norm() > 1e-3));
        let s = biseparable(n, lambda, &hp).unwrap();
        prop_assert!(c_coefficients(&s).max_abs() < 1e-12);
        let sep = first_party_separability(&s, DEFAULT_PURITY_TOL);
        prop_assert!(sep.separable);
        prop_assert!((sep.lambda.unwrap() - lambda).norm() < 1e-9);
        prop_assert!(!gme_check(&s, DEFAULT_PURITY_TOL).is_gme);
    }

    #[test]
    fn margins_are_phase_invariant(s in state(), alpha in angle(), phi in 0.0..2.0 * PI) {
        let a = margins_at(&s, alpha);
        let b = margins_at(&s.with_global_phase(phi), alpha);
        prop_assert!((a.entanglement - b.entanglement).abs() < 1e-12);
        prop_assert!((a.non_maximality - b.non_maximality).abs() < 1e-12);
        prop_assert!((a.residual_norm - b.residual_norm).abs() < 1e-12);
    }

    #[test]
    fn margins_bracket_schmidt_coefficients(s in state(), alpha in angle()) {
        let m = margins_at(&s, alpha);
        prop_assume!(m.residual_norm > 1e-8);
        let sd = schmidt_two_qubit(&dense_residual(&s, alpha)).unwrap();
        prop_assert!(m.entanglement <= sd.lambda_min + 1e-9);
        prop_assert!(sd.lambda_min <= 2f64.sqrt() * m.entanglement + 1e-9);
        prop_assert!((sd.lambda_max * sd.lambda_min - m.entanglement).abs() < 1e-9);
    }

    #[test]
    fn annihilator_and_complement(w0 in amplitude(), w1 in amplitude()) {
        prop_assume!(w0.norm() + w1.norm() > 1e-6);
        let v = annihilator(w0, w1).unwrap();
        prop_assert!(v.is_normalized());
        prop_assert!(v.apply(w0, w1).norm() < 1e-12 * (1.0 + w0.norm() + w1.norm()));
        let u = orthocomplement(&v).unwrap();
        prop_assert!(u.ket_overlap(&v).norm() < 1e-12);
    }

    #[test]
    fn hardy_vectors_are_measurements(s in state(), alpha in angle()) {
        let r = residual_coeffs(&s, alpha);
        if let Ok(v) = hardy_vectors(&r, 1e-10) {
            for m in [&v.a0, &v.a1, &v.b0, &v.b1] {
                let (p, q): (&Bra, &Bra) = (&m.outcome0, &m.outcome1);
                prop_assert!(p.is_normalized() && q.is_normalized());
                prop_assert!(p.ket_overlap(q).norm() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_states_certify_and_verify(n in 3usize..=7, seed in any::<u64>()) {
        let s = random_near_symmetric(n, seed).unwrap();
        let r = certify(&s, &CertifyOptions::default()).unwrap();
        prop_assert!(r.verdict, "{:?}", r.failure);
        prop_assert!(verify_pipeline(&s, &r));
        prop_assert!((r.improved_gap.unwrap() - r.catalonia_lhs.unwrap()).abs() < 1e-12);
    }
}
