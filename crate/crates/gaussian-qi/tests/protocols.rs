mod common;

use gaussian_qi::channels::{apply_channel, GaussianChannel};
use gaussian_qi::config::LogBase;
use gaussian_qi::discrimination::fidelity_1mode;
use gaussian_qi::linalg::{eye, submatrix, subvector, z2, Mat};
use gaussian_qi::measurements::{gaussian_povm, HomodyneStep, Quadrature};
use gaussian_qi::phase_space::{g_function, make_state, tensor, GaussianState, StateKind};
use gaussian_qi::protocols::*;
use gaussian_qi::unitaries::{apply, beam_splitter, embed};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Outcome-averaged output of the Bell-measurement circuit, built from the
/// conditioning pipeline: input on mode 0, resource on modes 1, 2.
fn teleported(input: &GaussianState, resource: &GaussianState) -> GaussianState {
    let bs = embed(&beam_splitter(0.5).unwrap(), &[0, 1], 3).unwrap();
    let g = 2f64.sqrt();
    let run = |m1: f64, m2: f64| {
        let plan = [
            HomodyneStep { mode: 1, quadrature: Quadrature::Q, outcome: m1 },
            HomodyneStep { mode: 0, quadrature: Quadrature::P, outcome: m2 },
        ];
        let rec = gaussian_povm(input, resource, &bs, &plan).unwrap();
        let mut x = rec.conditioned.mean.clone();
        x[0] -= g * m1;
        x[1] += g * m2;
        (x, rec.conditioned.cov)
    };
    let (x0, vc) = run(0.0, 0.0);
    let (x1, _) = run(1.0, 0.0);
    let (x2, _) = run(0.0, 1.0);
    let k = Mat::from_columns(&[&x1 - &x0, &x2 - &x0]);
    let mixed = apply(&tensor(input, resource), &bs).unwrap();
    let idx = [2, 1];
    let law_cov = submatrix(&mixed.cov, &idx, &idx);
    let law_mean = subvector(&mixed.mean, &idx);
    GaussianState::new(&x0 + &k * law_mean, &vc + &k * law_cov * k.transpose()).unwrap()
}

#[test]
fn epr_coherent_fidelity_closed_form() {
    let v_in = eye(2);
    let mut last = 0.0;
    for i in 0..=40 {
        let r = 0.1 * i as f64;
        let epr = make_state(&StateKind::Epr { r }, 2).unwrap();
        let f = teleport_fidelity(&epr, &v_in).unwrap();
        assert!((f - 1.0 / (1.0 + (-2.0 * r).exp())).abs() < 1e-12, "r = {r}");
        assert!(f >= last);
        last = f;
    }
    let vac = GaussianState::vacuum(2);
    assert!((teleport_fidelity(&vac, &v_in).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn gamma_formula_matches_operational_average() {
    let alpha = Complex64::new(0.7, -0.2);
    let inputs = [
        make_state(&StateKind::Coherent { alpha: vec![alpha] }, 1).unwrap(),
        make_state(&StateKind::SqueezedVacuum { r: 0.5, theta: 0.3 }, 1).unwrap(),
        make_state(&StateKind::GeneralOneMode { n_bar: 0.0, r: 0.8, theta: -1.1, alpha }, 1).unwrap(),
    ];
    let epr = make_state(&StateKind::Epr { r: 0.9 }, 2).unwrap();
    let lossy = apply_channel(&GaussianChannel::lossy(0.7, 0.3).unwrap(), &epr, 1).unwrap();
    for resource in [epr, lossy, GaussianState::vacuum(2)] {
        for input in &inputs {
            let f = teleport_fidelity(&resource, &input.cov).unwrap();
            let out = teleported(input, &resource);
            let f_op = fidelity_1mode(input, &out).unwrap();
            assert!((f - f_op).abs() < 1e-12, "{f} vs {f_op}");
        }
    }
}

#[test]
fn teleport_rejects_bad_shapes() {
    let three = GaussianState::vacuum(3);
    assert!(teleport_fidelity(&three, &eye(2)).is_err());
    let epr = make_state(&StateKind::Epr { r: 0.5 }, 2).unwrap();
    assert!(teleport_fidelity(&epr, &eye(4)).is_err());
}

#[test]
fn fidelity_bands() {
    assert_eq!(classify_fidelity(0.5).unwrap(), FidelityBand::Classical);
    assert_eq!(classify_fidelity(0.0).unwrap(), FidelityBand::Classical);
    assert_eq!(classify_fidelity(0.6).unwrap(), FidelityBand::Quantum);
    assert_eq!(classify_fidelity(0.666).unwrap(), FidelityBand::Quantum);
    assert_eq!(classify_fidelity(2.0 / 3.0).unwrap(), FidelityBand::Quantum);
    assert_eq!(classify_fidelity(0.667).unwrap(), FidelityBand::NoCloning);
    assert_eq!(classify_fidelity(0.7).unwrap(), FidelityBand::NoCloning);
    assert!(classify_fidelity(1.1).is_err());
    assert!(classify_fidelity(-0.1).is_err());
    assert!(classify_fidelity(f64::NAN).is_err());
}

#[test]
fn swap_log_negativity_closed_form() {
    for i in 0..=30 {
        let r = 0.1 * i as f64;
        let s = entanglement_swap(r, r).unwrap();
        let want = (2.0 * r).cosh().ln();
        assert!((s.log_negativity - want).abs() < 1e-9, "r = {r}: {} vs {want}", s.log_negativity);
        if r > 0.0 {
            assert!(s.log_negativity > 0.0);
        }
        assert!(s.state.is_pure(1e-8).unwrap());
    }
    assert_eq!(entanglement_swap(0.0, 0.0).unwrap().log_negativity, 0.0);
    assert!((entanglement_swap(1.0, 1.0).unwrap().log_negativity - 1.325_003).abs() < 1e-6);
    assert!(entanglement_swap(-0.1, 0.2).is_err());
}

#[test]
fn asymmetric_swap_weaker_than_stronger_link() {
    let s = entanglement_swap(0.4, 1.5).unwrap();
    assert!(s.log_negativity > 0.0);
    assert!(s.log_negativity < 0.8);
}

#[test]
fn coherent_clone_fidelities() {
    for a in [Complex64::new(0.0, 0.0), Complex64::new(1.2, -0.5), Complex64::new(-3.0, 2.0)] {
        let input = make_state(&StateKind::Coherent { alpha: vec![a] }, 1).unwrap();
        let out = clone_1to2(&input).unwrap();
        assert!((out.f_clone - 2.0 / 3.0).abs() < 1e-12);
        assert!((out.f_anticlone - 0.5).abs() < 1e-12);
        assert!((&out.clone1.mean - &input.mean).amax() < 1e-12);
        assert!((&out.clone2.mean - &input.mean).amax() < 1e-12);
        assert!((&out.anticlone.mean - z2() * &input.mean).amax() < 1e-12);
    }
    let vac = clone_1to2(&GaussianState::vacuum(1)).unwrap();
    assert!((&vac.clone1.cov - eye(2) * 2.0).amax() < 1e-12);
    assert!(vac.clone1.mean.amax() < 1e-15);
}

#[test]
fn clone_rejects_two_modes() {
    assert!(clone_1to2(&GaussianState::vacuum(2)).is_err());
}

#[test]
fn mn_cloning() {
    assert!((mn_clone_fidelity(1, 2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    for n in 1..6 {
        assert_eq!(mn_clone_fidelity(n, n).unwrap(), 1.0);
    }
    assert!((mn_clone_fidelity(1, 1_000_000).unwrap() - 0.5).abs() < 1e-6);
    assert!(mn_clone_fidelity(3, 2).is_err());
    assert!(mn_clone_fidelity(0, 2).is_err());
    for n in 1..5 {
        for m in n..12 {
            assert!(mn_clone_fidelity(n, m + 1).unwrap() < mn_clone_fidelity(n, m).unwrap());
            if m > n {
                assert!(mn_clone_fidelity(n + 1, m).unwrap() > mn_clone_fidelity(n, m).unwrap());
            }
        }
    }
}

#[test]
fn dense_coding_limits() {
    for m in [0.0, 0.5, 3.0, 40.0] {
        let r = dense_coding_rate(m, 1.0, 1.0, LogBase::Two).unwrap();
        assert!((r - (1.0f64 + m).log2()).abs() < 1e-12);
        let r0 = dense_coding_rate(m, 0.3, 0.0, LogBase::E).unwrap();
        assert!(r0.is_finite() && r0 == 0.0);
    }
    let mut last = -1.0;
    for i in 0..=50 {
        let eta = i as f64 / 50.0;
        let r = dense_coding_rate(5.0, 0.2, eta, LogBase::Two).unwrap();
        assert!(r >= last);
        last = r;
    }
    assert!(dense_coding_rate(1.0, 1.5, 0.5, LogBase::Two).is_err());
    assert!(dense_coding_rate(1.0, 0.0, 0.5, LogBase::Two).is_err());
    assert!(dense_coding_rate(-1.0, 0.5, 0.5, LogBase::Two).is_err());
    assert!(dense_coding_rate(1.0, 0.5, 1.2, LogBase::Two).is_err());
}

#[test]
fn dense_coding_beats_classical_capacity_somewhere() {
    let m = 10.0;
    let v: Vec<f64> = (1..=100).map(|k| k as f64 / 100.0).collect();
    let eta: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let pts = dense_coding_advantage(m, &v, &eta, LogBase::Two).unwrap();
    assert!(!pts.is_empty());
    let c = g_function(2.0 * m + 1.0, LogBase::Two).unwrap();
    for p in &pts {
        assert!(p.rate > c);
        assert!((p.capacity - c).abs() < 1e-15);
    }
    // no squeezing never helps
    assert!(pts.iter().all(|p| p.v_sq < 1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn clone_circuit_matches_formulas(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input = common::random_state(1, 2.0, &mut rng);
        let out = clone_1to2(&input).unwrap();
        let (v1, v2, v3) = clone_covariances(&input.cov);
        prop_assert!((&out.clone1.cov - v1).amax() < 1e-10);
        prop_assert!((&out.clone2.cov - v2).amax() < 1e-10);
        prop_assert!((&out.anticlone.cov - v3).amax() < 1e-10);
        prop_assert!((&out.clone1.cov - &input.cov - eye(2)).amax() < 1e-10);
        for s in [&out.clone1, &out.clone2, &out.anticlone] {
            prop_assert!(s.validate().uncertainty_ok);
        }
    }

    #[test]
    fn swap_independent_of_outcomes(r in 0.0..2.5f64, a in -4.0..4.0f64, b in -4.0..4.0f64) {
        let s0 = entanglement_swap(r, r).unwrap();
        let s1 = entanglement_swap_with(r, r, [a, b]).unwrap();
        prop_assert!((&s0.state.cov - &s1.state.cov).amax() < 1e-10 * (1.0 + (2.0 * r).exp()));
        prop_assert!((s0.log_negativity - s1.log_negativity).abs() < 1e-10);
    }

    #[test]
    fn fidelity_monotone_in_r(r in 0.0..3.0f64, dr in 0.001..0.5f64) {
        let lo = make_state(&StateKind::Epr { r }, 2).unwrap();
        let hi = make_state(&StateKind::Epr { r: r + dr }, 2).unwrap();
        prop_assert!(teleport_fidelity(&hi, &eye(2)).unwrap() > teleport_fidelity(&lo, &eye(2)).unwrap());
    }
}
