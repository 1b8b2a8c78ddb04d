use harmonic_duality::duality::{
    verify_entropy_duality, verify_evenness, verify_fourier_conjugation, verify_homogeneity, verify_spectrum_duality,
    DualityOptions, EvennessFamily,
};
use harmonic_duality::model::dual_ratio;
use harmonic_duality::modes::diagonalize;
use harmonic_duality::rdm::{build_grid, gaussian_ground_kernel, rdm_kernel, RdmOptions, SubsetSpec};
use harmonic_duality::spectra::{eigenvalues, renyi_entropy};
use harmonic_duality::wavefunction::{fourier_mode_check, StateSpec, StateTemplate};
use harmonic_duality::InteractionMatrix;
use nalgebra::{DMatrix, SymmetricEigen};

fn sqrt_psd(d: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(d.clone());
    let s = DMatrix::from_diagonal(&e.eigenvalues.map(f64::sqrt));
    &e.eigenvectors * s * e.eigenvectors.transpose()
}

/// 1-RDO spectrum of the 2-particle ground state by a dense trapezoid rule,
/// built from `ψ ∝ exp(-½ xᵀ √D x)` directly.
fn trapezoid_spectrum(d: &DMatrix<f64>, half_width: f64, h: f64) -> Vec<f64> {
    let a = sqrt_psd(d);
    let n = (2.0 * half_width / h).round() as usize + 1;
    let x: Vec<f64> = (0..n).map(|i| -half_width + i as f64 * h).collect();
    let psi = DMatrix::from_fn(n, n, |i, j| {
        let (u, v) = (x[i], x[j]);
        (-0.5 * (a[(0, 0)] * u * u + 2.0 * a[(0, 1)] * u * v + a[(1, 1)] * v * v)).exp()
    });
    let norm: f64 = psi.iter().map(|p| p * p).sum::<f64>() * h * h;
    let rho = (&psi * psi.transpose()) * (h * h / norm);
    let mut ev: Vec<f64> = SymmetricEigen::new(rho).eigenvalues.iter().copied().collect();
    ev.sort_by(|p, q| q.total_cmp(p));
    ev
}

fn ground_spectrum(d: &InteractionMatrix, kept: &[usize], g: usize) -> Vec<f64> {
    let modes = diagonalize(d).unwrap();
    let s = StateSpec::ground(&modes);
    let grid = build_grid(g, harmonic_duality::rdm::auto_scale(&modes.lengths)).unwrap();
    let k = rdm_kernel(&s, &SubsetSpec::from_one_based(kept, d.n()).unwrap(), &grid, &RdmOptions::default()).unwrap();
    eigenvalues(&k, 60).unwrap().values
}

#[test]
fn nystrom_matches_dense_trapezoid() {
    let d = InteractionMatrix::from_rows(&[vec![1.5, -0.5], vec![-0.5, 1.5]]).unwrap();
    let brute = trapezoid_spectrum(d.entries(), 9.0, 0.05);
    let ny = ground_spectrum(&d, &[1], 64);
    assert!(ny.len() >= 5);
    for k in 0..ny.len() {
        assert!((brute[k] - ny[k]).abs() < 1e-10, "k={k}: {} vs {}", brute[k], ny[k]);
    }
}

#[test]
fn two_mode_spectrum_is_geometric() {
    // normal-mode eigenvalues 1 and 100, so ξ is large enough to resolve ten ratios
    let d = InteractionMatrix::from_rows(&[vec![50.5, -49.5], vec![-49.5, 50.5]]).unwrap();
    let ny = ground_spectrum(&d, &[1], 64);
    let xi = ny[1] / ny[0];
    for k in 0..10 {
        assert!((ny[k + 1] / ny[k] - xi).abs() < 1e-6, "k={k}");
    }
    assert!((ny[0] - (1.0 - xi)).abs() < 1e-10);
}

#[test]
fn exchange_symmetry_of_pair_spectra() {
    let d = InteractionMatrix::identical_1d(1.0, 0.5, 3).unwrap();
    let a = ground_spectrum(&d, &[1, 2], 32);
    let b = ground_spectrum(&d, &[2, 3], 32);
    let c = ground_spectrum(&d, &[1, 3], 32);
    for k in 0..a.len().min(20) {
        assert!((a[k] - b[k]).abs() < 1e-9 && (a[k] - c[k]).abs() < 1e-9, "k={k}");
    }
}

#[test]
fn one_body_trace_of_three_particles() {
    let d = InteractionMatrix::identical_1d(1.0, 0.5, 3).unwrap();
    let s = ground_spectrum(&d, &[1], 48);
    assert!((s.iter().take(40).sum::<f64>() - 1.0).abs() < 1e-8);
}

#[test]
fn closed_form_kernel_entries_match_nystrom() {
    let d = InteractionMatrix::from_rows(&[vec![1.5, -0.5], vec![-0.5, 1.5]]).unwrap();
    let modes = diagonalize(&d).unwrap();
    let m = SubsetSpec::new(vec![0], 2).unwrap();
    let grid = build_grid(48, 1.0).unwrap();
    let ny = rdm_kernel(&StateSpec::ground(&modes), &m, &grid, &RdmOptions::default()).unwrap();
    let cf = gaussian_ground_kernel(&modes, &m).unwrap().to_kernel_matrix(&grid).unwrap();
    let mut worst = 0.0_f64;
    for a in 0..ny.dim {
        for b in 0..ny.dim {
            worst = worst.max((ny.entry(a, b) - cf.entry(a, b)).norm());
        }
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn schur_complement_by_hand() {
    let d = DMatrix::from_row_slice(2, 2, &[1.5, -0.5, -0.5, 1.5]);
    let a = sqrt_psd(&d);
    let gamma = a[(0, 0)] - 0.5 * a[(0, 1)] * a[(0, 1)] / a[(1, 1)];
    let b = 0.5 * a[(0, 1)] * a[(0, 1)] / a[(1, 1)];
    let modes = diagonalize(&InteractionMatrix::generic(d).unwrap()).unwrap();
    let k = gaussian_ground_kernel(&modes, &SubsetSpec::new(vec![0], 2).unwrap()).unwrap();
    assert!((k.gamma[(0, 0)] - gamma).abs() < 1e-14);
    assert!((k.b[(0, 0)] - b).abs() < 1e-14);
    // λ_k = (1-ξ)ξ^k with ξ from the 1×1 eigenproblem B/Γ
    let c = b / gamma;
    let xi = c / (1.0 + (1.0 - c * c).sqrt());
    let cf = k.closed_form_spectrum(5).unwrap();
    for (i, v) in cf.iter().enumerate() {
        assert!((v - (1.0 - xi) * xi.powi(i as i32)).abs() < 1e-14);
    }
}

#[test]
fn hermite_fourier_transform() {
    for nu in [0, 1, 2, 5] {
        for ell in [0.5, 1.0, 2.0] {
            assert!(fourier_mode_check(nu, ell, 64).unwrap() < 1e-12, "nu={nu} ell={ell}");
        }
    }
}

#[test]
fn fourier_examples() {
    let opts = DualityOptions::with_nodes(64);
    let m = SubsetSpec::new(vec![0], 2).unwrap();
    let iso = InteractionMatrix::identical_1d(1.0, 0.0, 2).unwrap();
    let r = verify_fourier_conjugation(&iso, &StateTemplate::ground(2), &m, 16, &opts, 1e-10).unwrap();
    assert!(r.passed, "{}", r.max_abs_diff);

    let diag = InteractionMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap();
    let r = verify_fourier_conjugation(&diag, &StateTemplate::single(vec![1, 0]), &m, 16, &opts, 1e-7).unwrap();
    assert!(r.passed, "{}", r.max_abs_diff);

    let mosh = InteractionMatrix::moshinsky(1.0, 0.5, 2).unwrap();
    let r = verify_fourier_conjugation(&mosh, &StateTemplate::ground(2), &m, 24, &opts, 1e-7).unwrap();
    assert!(r.passed, "{}", r.max_abs_diff);
    let s = verify_spectrum_duality(&mosh, &StateTemplate::ground(2), &m, &opts, 1e-8).unwrap();
    assert!(s.passed);
    let (a, b) = (r.spectrum_a.unwrap(), r.spectrum_b.unwrap());
    let diff = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff < 5e-7);
}

#[test]
fn spectral_duality_examples() {
    let opts = DualityOptions::with_nodes(64);
    let m = SubsetSpec::new(vec![0], 2).unwrap();
    let id = InteractionMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    assert!(verify_spectrum_duality(&id, &StateTemplate::ground(2), &m, &opts, 1e-12).unwrap().passed);

    let d = InteractionMatrix::from_rows(&[vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
    assert!(verify_spectrum_duality(&d, &StateTemplate::ground(2), &m, &opts, 1e-8).unwrap().passed);

    let d3 = InteractionMatrix::identical_1d(1.0, 0.5, 3).unwrap();
    let m3 = SubsetSpec::new(vec![0], 3).unwrap();
    let r = verify_spectrum_duality(&d3, &StateTemplate::single(vec![0, 1, 0]), &m3, &opts, 1e-7).unwrap();
    assert!(r.passed, "{}", r.max_abs_diff);
}

#[test]
fn excited_duality_against_doubled_grid() {
    // the dual side computed at 2G must agree with the original at G
    let d3 = InteractionMatrix::identical_1d(1.0, 0.5, 3).unwrap();
    let t = StateTemplate::single(vec![0, 1, 0]);
    let m3 = SubsetSpec::new(vec![0], 3).unwrap();
    let lo = verify_spectrum_duality(&d3, &t, &m3, &DualityOptions::with_nodes(48), 1e-7).unwrap();
    let hi = verify_spectrum_duality(&d3, &t, &m3, &DualityOptions::with_nodes(96), 1e-7).unwrap();
    let (a, b) = (lo.spectrum_a.unwrap(), hi.spectrum_b.unwrap());
    for (x, y) in a.values.iter().zip(&b.values).take(10) {
        assert!((x - y).abs() < 1e-7);
    }
}

#[test]
fn moshinsky_entropy_against_dual_ratio() {
    let opts = DualityOptions::with_nodes(64);
    let m = SubsetSpec::new(vec![0], 2).unwrap();
    let lam = -0.25;
    let lam_dual = dual_ratio(lam, 2).unwrap();
    assert!((lam_dual - 0.5).abs() < 1e-15);
    let spec = |l: f64| {
        let d = InteractionMatrix::moshinsky(1.0, l, 2).unwrap();
        let modes = diagonalize(&d).unwrap();
        let grid = build_grid(64, (modes.lengths[0] * modes.lengths[1]).sqrt()).unwrap();
        eigenvalues(&rdm_kernel(&StateSpec::ground(&modes), &m, &grid, &RdmOptions::default()).unwrap(), 200).unwrap()
    };
    let (a, b) = (spec(lam), spec(lam_dual));
    let (sa, sb) = (renyi_entropy(&a, 2.0).unwrap().value, renyi_entropy(&b, 2.0).unwrap().value);
    assert!((sa - sb).abs() < 1e-8, "{sa} vs {sb}");

    let d3 = InteractionMatrix::identical_1d(1.0, 0.5, 3).unwrap();
    let rs = verify_entropy_duality(&d3, &[3.0], &StateTemplate::ground(3), &SubsetSpec::new(vec![0], 3).unwrap(), &opts, 1e-8)
        .unwrap();
    assert!(rs.iter().all(|r| r.passed));
}

#[test]
fn evenness_examples() {
    let opts = DualityOptions::with_nodes(64);
    let m3 = SubsetSpec::new(vec![0], 3).unwrap();
    let fam = EvennessFamily::Identical { n: 3 };
    let h = 2f64.ln() / 2.0;
    let rs = verify_evenness(&fam, &[vec![0.0], vec![h]], &StateTemplate::ground(3), &m3, &opts, 1e-8).unwrap();
    assert_eq!(rs[0].max_abs_diff, 0.0);
    assert!(rs[1].passed);

    // d = (1, e⁴) against (e⁴, 1) under a 45° rotation, so the state is entangled
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rot = DMatrix::from_row_slice(2, 2, &[s, s, -s, s]);
    let fam = EvennessFamily::Rotated { rotation: Some(rot) };
    let m = SubsetSpec::new(vec![0], 2).unwrap();
    let rs = verify_evenness(&fam, &[vec![1.0]], &StateTemplate::ground(2), &m, &opts, 1e-9).unwrap();
    assert!(rs[0].passed, "{}", rs[0].max_abs_diff);
}

#[test]
fn evenness_agrees_with_spectral_duality() {
    let opts = DualityOptions::with_nodes(64);
    let m3 = SubsetSpec::new(vec![0], 3).unwrap();
    let delta = 0.3_f64;
    let r = ((4.0 * delta).exp() - 1.0) / 3.0;
    let even = verify_evenness(&EvennessFamily::Identical { n: 3 }, &[vec![delta]], &StateTemplate::ground(3), &m3, &opts, 1e-8)
        .unwrap()
        .remove(0);
    let spec = verify_spectrum_duality(&InteractionMatrix::identical_1d(1.0, r, 3).unwrap(), &StateTemplate::ground(3), &m3, &opts, 1e-8)
        .unwrap();
    let floor = 1e-15;
    assert!(even.max_abs_diff.max(floor) <= 10.0 * spec.max_abs_diff.max(floor));
    assert!(spec.max_abs_diff.max(floor) <= 10.0 * even.max_abs_diff.max(floor));
}

#[test]
fn homogeneity_examples() {
    let opts = DualityOptions::with_nodes(64);
    let m = SubsetSpec::new(vec![0], 2).unwrap();
    let mosh = InteractionMatrix::moshinsky(1.0, 0.5, 2).unwrap();
    assert_eq!(verify_homogeneity(&mosh, 1.0, &StateTemplate::ground(2), &m, &opts, 1e-9).unwrap().max_abs_diff, 0.0);
    assert!(verify_homogeneity(&mosh, 7.0, &StateTemplate::ground(2), &m, &opts, 1e-9).unwrap().passed);
    let chain = InteractionMatrix::chain_1d(1.0, 1.0, 3).unwrap();
    let m3 = SubsetSpec::new(vec![0], 3).unwrap();
    assert!(verify_homogeneity(&chain, 0.01, &StateTemplate::ground(3), &m3, &opts, 1e-8).unwrap().passed);
}

#[test]
fn generic_subsets_may_differ() {
    // no exchange symmetry for a chain's end and middle sites
    let chain = InteractionMatrix::chain_1d(1.0, 0.2, 3).unwrap();
    let a = ground_spectrum(&chain, &[1], 48);
    let b = ground_spectrum(&chain, &[2], 48);
    assert!((a[0] - b[0]).abs() > 1e-4);
}
