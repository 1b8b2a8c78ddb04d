use harmonic_duality::duality::{verify_spectrum_pair, DualityOptions};
use harmonic_duality::model::dual_ratio;
use harmonic_duality::modes::{delta_coordinates, diagonalize, projective_normalize};
use harmonic_duality::rdm::{auto_scale, build_grid, gaussian_ground_kernel, rdm_kernel, RdmOptions, SubsetSpec};
use harmonic_duality::spectra::{eigenvalues, renyi_entropy, von_neumann_entropy};
use harmonic_duality::wavefunction::{energy, expected_energy, StateSpec, StateTemplate};
use harmonic_duality::{InteractionMatrix, Parallelism};
use proptest::prelude::*;

fn random_model(n: usize) -> impl Strategy<Value = InteractionMatrix> {
    (any::<u64>(), 0.3f64..1.0, 1.0f64..3.0).prop_map(move |(seed, lo, hi)| InteractionMatrix::random(n, seed, lo, hi).unwrap())
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn dual_is_an_involution(d in random_model(3)) {
        let back = d.dual().unwrap().dual().unwrap();
        let err = (back.entries() - d.entries()).amax();
        prop_assert!(err < 1e-12 * d.entries().amax().max(1.0));
    }

    #[test]
    fn dual_ratio_is_an_involution(n in 2usize..6, t in 0.0f64..1.0) {
        // sample r inside (-1/n, 3)
        let lo = -1.0 / n as f64;
        let r = lo + 1e-3 + t * (3.0 - lo);
        let back = dual_ratio(dual_ratio(r, n).unwrap(), n).unwrap();
        prop_assert!((back - r).abs() < 1e-12 * r.abs().max(1.0));
    }

    #[test]
    fn dual_ratio_matches_inverse_matrix(n in 2usize..5, t in 0.0f64..1.0) {
        let r = -1.0 / n as f64 + 0.05 + 2.0 * t;
        let d = InteractionMatrix::identical_1d(1.0, r, n).unwrap();
        let got = d.dual().unwrap().identical_ratio(1e-9).unwrap();
        prop_assert!((got - dual_ratio(r, n).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn dual_lengths_are_inverted(d in random_model(4)) {
        let a = diagonalize(&d).unwrap();
        let b = diagonalize(&d.dual().unwrap()).unwrap();
        let mut inv: Vec<f64> = a.lengths.iter().map(|l| 1.0 / l).collect();
        inv.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in inv.iter().zip(&b.lengths) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn deltas_ignore_overall_scale(d in random_model(3), c in 0.1f64..10.0) {
        let a = diagonalize(&d).unwrap();
        let b = diagonalize(&d.scaled(c).unwrap()).unwrap();
        let (da, db) = (delta_coordinates(&a.lengths), delta_coordinates(&b.lengths));
        for (x, y) in da.deltas.iter().zip(&db.deltas) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        let (pa, pb) = (projective_normalize(&a.lengths), projective_normalize(&b.lengths));
        for (x, y) in pa.iter().zip(&pb) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn kernel_is_psd_with_unit_trace(d in random_model(2)) {
        let modes = diagonalize(&d).unwrap();
        let grid = build_grid(48, auto_scale(&modes.lengths)).unwrap();
        let k = rdm_kernel(&StateSpec::ground(&modes), &SubsetSpec::new(vec![0], 2).unwrap(), &grid, &RdmOptions::default()).unwrap();
        let spec = eigenvalues(&k, usize::MAX).unwrap();
        prop_assert!(spec.clamp_magnitude < 1e-12);
        prop_assert!((spec.trace_estimate - 1.0).abs() < 1e-8);
        prop_assert!((spec.values.iter().sum::<f64>() + spec.trace_deficit - spec.trace_estimate).abs() < 1e-12);
        prop_assert!(spec.values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(k.hermiticity_error() == 0.0);
    }

    #[test]
    fn closed_form_spectrum_has_unit_trace(d in random_model(3), kept in 0usize..3) {
        let modes = diagonalize(&d).unwrap();
        let g = gaussian_ground_kernel(&modes, &SubsetSpec::new(vec![kept], 3).unwrap()).unwrap();
        let s: f64 = g.closed_form_spectrum(usize::MAX).unwrap().iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn nystrom_agrees_with_closed_form(d in random_model(2)) {
        let modes = diagonalize(&d).unwrap();
        let m = SubsetSpec::new(vec![0], 2).unwrap();
        let grid = build_grid(64, auto_scale(&modes.lengths)).unwrap();
        let ny = eigenvalues(&rdm_kernel(&StateSpec::ground(&modes), &m, &grid, &RdmOptions::default()).unwrap(), 20).unwrap();
        let cf = gaussian_ground_kernel(&modes, &m).unwrap().closed_form_spectrum(20).unwrap();
        for (x, y) in ny.values.iter().zip(&cf) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn spectral_duality_on_random_models(d in random_model(3)) {
        let m = SubsetSpec::new(vec![0], 3).unwrap();
        let r = verify_spectrum_pair(&d, &d.dual().unwrap(), &StateTemplate::ground(3), &m, &DualityOptions::with_nodes(48), 1e-8).unwrap();
        prop_assert!(r.passed, "{}", r.max_abs_diff);
        prop_assert!(r.max_abs_diff >= 0.0);
    }

    #[test]
    fn sequential_and_parallel_are_bitwise_equal(d in random_model(3)) {
        let modes = diagonalize(&d).unwrap();
        let s = StateTemplate::single(vec![1, 0, 1]).bind(&modes).unwrap();
        let grid = build_grid(24, auto_scale(&modes.lengths)).unwrap();
        let m = SubsetSpec::new(vec![1], 3).unwrap();
        let seq = RdmOptions { parallelism: Parallelism::Sequential, ..Default::default() };
        let par = RdmOptions { parallelism: Parallelism::Rayon, ..Default::default() };
        let a = rdm_kernel(&s, &m, &grid, &seq).unwrap();
        let b = rdm_kernel(&s, &m, &grid, &par).unwrap();
        prop_assert_eq!(a.to_complex(), b.to_complex());
        prop_assert_eq!(a.trace_estimate.to_bits(), b.trace_estimate.to_bits());
    }

    #[test]
    fn energy_of_eigenstates(d in random_model(2), n0 in 0usize..3, n1 in 0usize..3) {
        let modes = diagonalize(&d).unwrap();
        let t = StateTemplate::single(vec![n0, n1]);
        let want = energy(&t.terms[0].1, &modes.eigvals).unwrap();
        let got = expected_energy(&t.bind(&modes).unwrap(), &d, 40).unwrap();
        prop_assert!((got - want).abs() < 1e-8, "{} vs {}", got, want);
    }

    #[test]
    fn renyi_approaches_von_neumann(d in random_model(2)) {
        let modes = diagonalize(&d).unwrap();
        let g = gaussian_ground_kernel(&modes, &SubsetSpec::new(vec![0], 2).unwrap()).unwrap();
        let grid = build_grid(48, auto_scale(&modes.lengths)).unwrap();
        let spec = eigenvalues(&g.to_kernel_matrix(&grid).unwrap(), usize::MAX).unwrap();
        let vn = von_neumann_entropy(&spec);
        for q in [1.0 - 1e-4, 1.0 + 1e-4] {
            prop_assert!((renyi_entropy(&spec, q).unwrap().value - vn).abs() < 1e-3);
        }
    }

    #[test]
    fn truncation_is_monotone(d in random_model(3), k in 1usize..10) {
        let modes = diagonalize(&d).unwrap();
        let grid = build_grid(32, auto_scale(&modes.lengths)).unwrap();
        let kern = rdm_kernel(&StateSpec::ground(&modes), &SubsetSpec::new(vec![2], 3).unwrap(), &grid, &RdmOptions::default()).unwrap();
        let short = eigenvalues(&kern, k).unwrap();
        let long = eigenvalues(&kern, k + 10).unwrap();
        for (x, y) in short.values.iter().zip(&long.values) {
            prop_assert!((x - y).abs() <= 1e-13);
        }
    }

    #[test]
    fn identical_particles_have_exchange_symmetry(r in -0.3f64..2.0, kept in 0usize..3) {
        let d = InteractionMatrix::identical_1d(1.0, r, 3).unwrap();
        let modes = diagonalize(&d).unwrap();
        let grid = build_grid(40, auto_scale(&modes.lengths)).unwrap();
        let s = StateSpec::ground(&modes);
        let spec = |i: usize| {
            eigenvalues(&rdm_kernel(&s, &SubsetSpec::new(vec![i], 3).unwrap(), &grid, &RdmOptions::default()).unwrap(), 20).unwrap()
        };
        let (a, b) = (spec(0), spec(kept));
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}
