//! Randomized structural properties of the building blocks.

mod common;

use common::*;
use modinv::format::JsonForm;
use modinv::matkit::{self, CMatrix};
use modinv::modular::{factorize_delta, kreal_conjugation, left_right_product, modular_from_vector};
use modinv::random;
use modinv::spectral::{
    data_equivalent, dual_data, induced_delta_spectrum, normalize_data, Multiplicity,
};
use modinv::standard_form::{
    left_superop, right_superop, trace_conjugation, FactorElement, HVector, SuperOperator,
};
use modinv::Tolerances;
use num_rational::Rational64;
use proptest::prelude::*;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn small(m: &CMatrix, reference: f64) -> bool {
    matkit::op_norm(m) <= 1e-9 * reference.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn herm_eig_reconstructs(seed in any::<u64>(), n in 1usize..7) {
        let a = random::hermitian(&mut rng(seed), n);
        let eig = matkit::herm_eig(&a, &tol()).unwrap();
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(small(&(eig.reconstruct() - &a), matkit::op_norm(&a)));
        prop_assert!(matkit::unitary_residual(&eig.vectors) <= 1e-10);
    }

    #[test]
    fn polar_factors(seed in any::<u64>(), n in 1usize..7) {
        let t = random::gaussian_matrix(&mut rng(seed), n);
        let polar = matkit::left_polar(&t).unwrap();
        let scale = t.norm_squared();
        prop_assert!(small(&(&polar.p * &polar.p - &t * t.adjoint()), scale));
        prop_assert!(small(&(&polar.p * &polar.w - &t), t.norm()));
        prop_assert!(matkit::unitary_residual(&polar.w) <= 1e-10);
    }

    #[test]
    fn kron_factorization_round_trip(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let (a, b) = (random::gaussian_matrix(&mut r, n), random::gaussian_matrix(&mut r, n));
        let s = SuperOperator::sandwich(&a, &b);
        let kf = matkit::nearest_kron_rank1(&s.smat, n).unwrap();
        prop_assert!(kf.residual <= 1e-10);
        let back = SuperOperator::sandwich(&kf.left, &kf.right);
        prop_assert!(matkit::rel_diff(&back.smat, &s.smat) <= 1e-10);
    }

    #[test]
    fn trace_is_cyclic_and_normalized(seed in any::<u64>(), n in 1usize..8) {
        let mut r = rng(seed);
        let m = model(n);
        let (a, b) = (random::gaussian_matrix(&mut r, n), random::gaussian_matrix(&mut r, n));
        let d = m.trace(&(&a * &b)) - m.trace(&(&b * &a));
        prop_assert!(d.norm() <= 1e-12 * a.norm() * b.norm());
        prop_assert!((m.trace(&matkit::identity(n)) - matkit::c(1.0)).norm() <= 1e-15);
        prop_assert!((m.norm(&m.trace_vector()) - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn left_and_right_actions_commute(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let m = model(n);
        let l = left_superop(&m, &FactorElement::new(random::gaussian_matrix(&mut r, n))).unwrap();
        let rt = right_superop(&m, &FactorElement::new(random::gaussian_matrix(&mut r, n))).unwrap();
        let comm = &(&l * &rt).smat - &(&rt * &l).smat;
        prop_assert!(small(&comm, matkit::op_norm(&l.smat) * matkit::op_norm(&rt.smat)));
    }

    #[test]
    fn trace_conjugation_swaps_sides(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let m = model(n);
        let a = random::gaussian_matrix(&mut r, n);
        let j = trace_conjugation(&m);
        let conj = j.conjugate_op(&left_superop(&m, &FactorElement::new(a.clone())).unwrap());
        let expected = right_superop(&m, &FactorElement::new(a.adjoint())).unwrap();
        prop_assert!(matkit::rel_diff(&conj.smat, &expected.smat) <= 1e-12);
        prop_assert!(j.conjugation_residual() <= 1e-12);
        prop_assert!(j.apply(&m.trace_vector()) == m.trace_vector());
    }

    #[test]
    fn equivalence_is_reflexive_and_symmetric(seed in any::<u64>(), n in 1usize..6, s in 0.01f64..100.0) {
        let mut r = rng(seed);
        let d = random_data(&mut r, n, 4);
        let e = random_data(&mut r, n, 4);
        let mut scaled = d.clone();
        for p in &mut scaled.pairs {
            p.mu *= s;
        }
        prop_assert!(data_equivalent(&d, &d, &tol()).unwrap());
        prop_assert!(data_equivalent(&d, &scaled, &tol()).unwrap());
        prop_assert_eq!(
            data_equivalent(&d, &e, &tol()).unwrap(),
            data_equivalent(&e, &d, &tol()).unwrap()
        );
    }

    #[test]
    fn duality_is_an_involution(seed in any::<u64>(), n in 1usize..6) {
        let d = random_data(&mut rng(seed), n, 4);
        let twice = dual_data(&dual_data(&d, &tol()).unwrap(), &tol()).unwrap();
        prop_assert!(data_equivalent(&twice, &d, &tol()).unwrap());
        let induced = induced_delta_spectrum(&d, &tol()).unwrap();
        let dual_induced = induced_delta_spectrum(&dual_data(&d, &tol()).unwrap(), &tol()).unwrap();
        prop_assert_eq!(induced.pairs.len(), dual_induced.pairs.len());
    }

    #[test]
    fn normalization_is_idempotent(seed in any::<u64>(), n in 1usize..6) {
        let d = random_data(&mut rng(seed), n, 4);
        let (once, _) = normalize_data(&d, &tol()).unwrap();
        let (twice, factor) = normalize_data(&once, &tol()).unwrap();
        prop_assert!((factor - 1.0).abs() <= 1e-12);
        prop_assert!((once.weighted_sum() - 1.0).abs() <= 1e-12);
        for (a, b) in once.pairs.iter().zip(&twice.pairs) {
            prop_assert!(rel_close(a.mu, b.mu, 1e-12));
            prop_assert_eq!(a.m, b.m);
        }
    }

    #[test]
    fn induced_spectrum_is_symmetric_under_inversion(seed in any::<u64>(), n in 1usize..7) {
        let d = random_data(&mut rng(seed), n, 4);
        let spec = induced_delta_spectrum(&d, &tol()).unwrap();
        let mut total = Rational64::from_integer(0);
        for p in &spec.pairs {
            let Multiplicity::Exact(q) = p.n else {
                return Err(TestCaseError::fail("type I multiplicity should be exact"));
            };
            total += q;
            let mirror = spec
                .pairs
                .iter()
                .find(|o| rel_close(o.lambda, 1.0 / p.lambda, 1e-8))
                .ok_or_else(|| TestCaseError::fail(format!("1/{} missing", p.lambda)))?;
            prop_assert_eq!(mirror.n, p.n);
        }
        prop_assert_eq!(total, Rational64::from_integer(1));
    }

    #[test]
    fn json_round_trips(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let d = random_data(&mut r, n, 4);
        let back = modinv::spectral::SpectralData::parse(&d.to_json().to_string()).unwrap();
        prop_assert_eq!(back, d);
        let u = HVector::new(random::gaussian_matrix(&mut r, n));
        prop_assert_eq!(HVector::parse(&u.to_json().to_string()).unwrap(), u);
    }

    #[test]
    fn modular_spectrum_is_ratios_of_h0(seed in any::<u64>(), n in 1usize..6) {
        let m = model(n);
        let u = HVector::new(random::invertible(&mut rng(seed), n));
        let mo = modular_from_vector(&m, &u).unwrap();
        let h = matkit::herm_eig(&mo.h0.mat, &tol()).unwrap().values;
        let mut ratios: Vec<f64> = h.iter().flat_map(|a| h.iter().map(move |b| a / b)).collect();
        ratios.sort_by(f64::total_cmp);
        let delta = matkit::herm_eig(&mo.delta.smat, &tol()).unwrap().values;
        for (x, y) in ratios.iter().zip(&delta) {
            prop_assert!(rel_close(*x, *y, 1e-9), "{x} vs {y}");
        }
    }

    #[test]
    fn kreal_fixes_delta(seed in any::<u64>(), n in 1usize..5) {
        let m = model(n);
        let u = HVector::new(random::invertible(&mut rng(seed), n));
        let delta = modular_from_vector(&m, &u).unwrap().delta;
        let k = kreal_conjugation(&m, &delta).unwrap();
        prop_assert!(k.conjugation_residual() <= 1e-10);
        let back = k.conjugate_op(&delta);
        prop_assert!(matkit::rel_diff(&back.smat, &delta.smat) <= 1e-10);
    }

    #[test]
    fn factorization_round_trip(seed in any::<u64>(), n in 1usize..6, s in 0.1f64..10.0) {
        let mut r = rng(seed);
        let m = model(n);
        let h = random::positive_definite(&mut r, n, 0.2, 3.0);
        let h = &h / m.trace(&h);
        let hp = random::positive_definite(&mut r, n, 0.2, 3.0).scale(s);
        let delta = left_right_product(&m, &FactorElement::new(h.clone()), &FactorElement::new(hp.clone())).unwrap();
        let f = factorize_delta(&m, &delta).unwrap();
        prop_assert!((&f.h.mat - &h).norm() <= 1e-9 * h.norm());
        prop_assert!((&f.h_prime.mat - &hp).norm() <= 1e-9 * hp.norm());
    }
}
