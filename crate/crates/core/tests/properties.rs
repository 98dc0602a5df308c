use lattice_resonance::birman_schwinger::{assemble_t, BsVariant};
use lattice_resonance::charval::{index_adaptive, AnnularSector, FnFamily};
use lattice_resonance::eig_oracle::{discrete_spectrum, eigs, riesz_projection};
use lattice_resonance::free_resolvent::{kernel_value, SurfacePoint, Threshold};
use lattice_resonance::generator::{generate_spec, Profile};
use lattice_resonance::lattice::{verify_assumption, LatticeWindow};
use lattice_resonance::matrix::{self, c, ComplexMatrix};
use lattice_resonance::scaling::{flow_phi, mobius_f, scaled_spectrum, spectral_arc, FourierGrid};
use lattice_resonance::spec::PerturbationSpec;
use num_complex::Complex64;
use proptest::prelude::*;

fn small_lambda() -> impl Strategy<Value = Complex64> {
    (0.01f64..0.4, -3.1f64..3.1).prop_map(|(r, a)| Complex64::from_polar(r, a))
}

fn theta(radius: f64) -> impl Strategy<Value = Complex64> {
    (0.0f64..radius, -3.14f64..3.14).prop_map(|(r, a)| Complex64::from_polar(r, a))
}

fn profile() -> impl Strategy<Value = Profile> {
    prop_oneof![Just(Profile::Selfadjoint), Just(Profile::Nonselfadjoint), Just(Profile::RankOne), Just(Profile::Fibered)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_depends_on_distance_only(l in small_lambda(), n in -20i64..20, m in -20i64..20, shift in -10i64..10) {
        let p = SurfacePoint::at_zero(l).unwrap();
        let a = kernel_value(p, n, m).unwrap();
        prop_assert_eq!(a, kernel_value(p, m, n).unwrap());
        prop_assert_eq!(a, kernel_value(p, n + shift, m + shift).unwrap());
    }

    #[test]
    fn mobius_group_and_inverse(a in theta(0.18), b in theta(0.18), re in -1.0f64..1.0, im in -0.5f64..0.5) {
        let l = c(re, im);
        let lhs = mobius_f(a, mobius_f(b, l).unwrap()).unwrap();
        prop_assert!((lhs - mobius_f(a + b, l).unwrap()).norm() < 1e-12);
        prop_assert!((mobius_f(-a, mobius_f(a, l).unwrap()).unwrap() - l).norm() < 1e-12);
    }

    #[test]
    fn real_flow_group_law(t1 in -0.4f64..0.4, t2 in -0.4f64..0.4, alpha in -3.1f64..3.1) {
        let lhs = flow_phi(t1, flow_phi(t2, alpha).unwrap()).unwrap();
        prop_assert!((lhs - flow_phi(t1 + t2, alpha).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn arcs_for_opposite_im_theta_are_conjugate(re in -0.1f64..0.1, im in 0.001f64..0.3) {
        let up = spectral_arc(c(re, im), 41).unwrap();
        let down = spectral_arc(c(re, -im), 41).unwrap();
        for (u, d) in up.iter().zip(&down) {
            prop_assert!((u - d.conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn generated_specs_round_trip_and_pass(seed in 0u64..1000, p in profile(), gamma in 0.2f64..3.0, d in 1usize..4) {
        let spec = generate_spec(seed, p, gamma, d).unwrap();
        prop_assert!(verify_assumption(&spec).pass);
        let text = spec.to_json().unwrap();
        let back = PerturbationSpec::from_json(&text).unwrap();
        prop_assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn threshold_four_is_j_conjugate(seed in 0u64..200, l in small_lambda()) {
        let spec = generate_spec(seed, Profile::Nonselfadjoint, 1.0, 1).unwrap();
        let w = LatticeWindow::new(8, 1).unwrap();
        let four = assemble_t(&spec, SurfacePoint::new(l, Threshold::Four).unwrap(), BsVariant::AtFour, &w).unwrap();
        let zero = assemble_t(&spec.j_conjugate_negated(&w), SurfacePoint::new(l, Threshold::Zero).unwrap(), BsVariant::AtZero, &w).unwrap();
        prop_assert_eq!(four.matrix, zero.matrix);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn riesz_ranks_tile_the_spectrum(vals in proptest::collection::vec(-3i32..=3, 4..7), mix in -0.3f64..0.3) {
        // eigenvalues on an integer grid, possibly repeated, conjugated by a fixed similarity
        let n = vals.len();
        let d = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, vals.iter().map(|&v| c(v as f64, 0.0))));
        let s = ComplexMatrix::identity(n, n) + ComplexMatrix::from_fn(n, n, |i, j| c(mix * ((i * 7 + j * 3) % 5) as f64 / 5.0, 0.0));
        let a = &s * d * s.clone().try_inverse().unwrap();
        let mut distinct: Vec<i32> = vals.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let mut total = 0;
        for v in distinct {
            let r = riesz_projection(&a, c(v as f64, 0.0), 0.4).unwrap();
            prop_assert!(r.idempotency_error <= 1e-8);
            total += r.rank;
        }
        prop_assert_eq!(total, n);
    }

    #[test]
    fn subdivision_conserves_counts(zr in 0.3f64..1.1, za in 0.15f64..2.8, pr in 0.3f64..1.1, pa in 0.15f64..2.8, fr in 0.4f64..0.6, fa in 0.4f64..0.6) {
        let zero = Complex64::from_polar(zr, za);
        let pole = Complex64::from_polar(pr, pa);
        let f = FnFamily::new(
            1,
            |z: Complex64| ComplexMatrix::from_element(1, 1, (z - zero) / (z - pole)),
            |z: Complex64| ComplexMatrix::from_element(1, 1, (zero - pole) / ((z - pole) * (z - pole))),
        );
        let parent = AnnularSector::new(c(0.0, 0.0), 0.2, 1.2, 0.1, 2.9).unwrap();
        let whole = index_adaptive(&f, &parent, 256);
        let parts: Vec<_> = parent.split(fr, fa).iter().map(|cell| index_adaptive(&f, cell, 256)).collect();
        // cells whose boundary passes too close to the zero or pole report an error instead of a count
        if let (Ok(whole), true) = (&whole, parts.iter().all(|p| p.is_ok())) {
            let sum: i64 = parts.into_iter().map(|p| p.unwrap().count).sum();
            prop_assert_eq!(whole.count, sum);
        }
    }
}

#[test]
fn real_theta_scaling_is_unitary_equivalence() {
    let spec = PerturbationSpec::scalar(1.0, 100.0, &[(0, 0, c(-4.0, 0.0)), (1, -1, c(0.3, 0.1)), (-1, 1, c(0.3, -0.1))]);
    let grid = FourierGrid::new(256).unwrap();
    let a = scaled_spectrum(&spec, c(0.02, 0.0), &grid).unwrap();
    let b = scaled_spectrum(&spec, c(0.11, 0.0), &grid).unwrap();
    assert_eq!(a.discrete.len(), b.discrete.len());
    for (x, y) in a.discrete.iter().zip(&b.discrete) {
        assert!((x - y).norm() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn selfadjoint_stable_values_are_real() {
    for seed in 0..4 {
        let spec = generate_spec(seed, Profile::Selfadjoint, 1.0, 1).unwrap();
        let rep = discrete_spectrum(&spec, &[100, 200], 1e-3).unwrap();
        for s in &rep.stable_discrete {
            assert!(s.value.im.abs() < 1e-10, "{}", s.value);
        }
    }
}

#[test]
fn hermitian_eigenvalues_are_real() {
    let n = 30;
    let a = ComplexMatrix::from_fn(n, n, |i, j| c(((i * j) % 7) as f64, (i as f64 - j as f64) * 0.1));
    let h = (&a + a.adjoint()) * c(0.5, 0.0);
    for z in eigs(&h).unwrap() {
        assert!(z.im.abs() < 1e-10);
    }
    assert!(matrix::max_abs(&h) > 0.0);
}
