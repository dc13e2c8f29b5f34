mod common;

use approx::assert_abs_diff_eq;
use gaussian_qi::linalg::{eye, mat2, omega, Mat, Vector};
use gaussian_qi::phase_space::*;
use gaussian_qi::unitaries::{apply, rotation, squeeze1};
use gaussian_qi::LogBase;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn omega_properties() {
    let f = SymplecticForm::new(3);
    assert_eq!(&f.matrix * &f.matrix, -eye(6));
    assert_eq!(f.matrix.transpose(), -f.matrix.clone());
}

#[test]
fn constructors() {
    let v = make_state(&StateKind::Vacuum, 1).unwrap();
    assert_eq!(v.cov, eye(2));
    assert_eq!(v.mean, Vector::zeros(2));
    let th = make_state(&StateKind::Thermal { n_bar: 1.0 }, 1).unwrap();
    assert_eq!(th.cov, eye(2) * 3.0);
    let c = make_state(&StateKind::Coherent { alpha: vec![Complex64::new(0.5, -1.0)] }, 1).unwrap();
    assert_eq!(c.mean.as_slice(), &[1.0, -2.0]);
    assert!(make_state(&StateKind::Thermal { n_bar: -0.1 }, 1).is_err());
    assert!(make_state(&StateKind::SqueezedVacuum { r: f64::NAN, theta: 0.0 }, 1).is_err());
    let g = make_state(&StateKind::GeneralOneMode { n_bar: 0.5, r: 0.3, theta: 0.4, alpha: Complex64::new(1.0, 0.0) }, 1).unwrap();
    let nu = g.symplectic_eigenvalues().unwrap();
    assert_abs_diff_eq!(nu[0], 2.0, epsilon = 1e-12);
}

#[test]
fn epr_variances() {
    let s = make_state(&StateKind::Epr { r: 1.0 }, 2).unwrap();
    let v = &s.cov;
    let qm = 0.5 * (v[(0, 0)] + v[(2, 2)] - 2.0 * v[(0, 2)]);
    let pp = 0.5 * (v[(1, 1)] + v[(3, 3)] + 2.0 * v[(1, 3)]);
    assert_abs_diff_eq!(qm, 0.13534, epsilon = 1e-5);
    assert_abs_diff_eq!(pp, 0.13534, epsilon = 1e-5);
    let d = s.validate();
    assert!(d.uncertainty_ok);
    for nu in s.symplectic_eigenvalues().unwrap() {
        assert_abs_diff_eq!(nu, 1.0, epsilon = 1e-9);
    }
}

#[test]
fn validation() {
    let d = GaussianState::vacuum(1).validate();
    assert!(d.symmetric_ok && d.uncertainty_ok);
    assert_abs_diff_eq!(d.min_sympl_eig.unwrap(), 1.0, epsilon = 1e-12);
    let bad = validate_moments(&Vector::zeros(2), &(eye(2) * 0.5)).unwrap();
    assert!(!bad.uncertainty_ok);
    assert!(GaussianState::new(Vector::zeros(2), eye(2) * 0.5).is_err());
    assert!(validate_moments(&Vector::zeros(3), &eye(3)).is_err());
    let asym = mat2(2.0, 0.5, 0.0, 2.0);
    assert!(!validate_moments(&Vector::zeros(2), &asym).unwrap().symmetric_ok);
}

#[test]
fn two_mode_standard_form() {
    let (a, b, c) = (2.0, 2.0, 1.0);
    let v = Mat::from_row_slice(4, 4, &[a, 0., c, 0., 0., a, 0., -c, c, 0., b, 0., 0., -c, 0., b]);
    let nu = symplectic_eigenvalues(&v).unwrap();
    assert_abs_diff_eq!(nu[0], 3f64.sqrt(), epsilon = 1e-12);
    assert_abs_diff_eq!(nu[1], 3f64.sqrt(), epsilon = 1e-12);

    // closed-form S for unequal a, b
    let (a, b, c) = (3.0, 2.0, 1.5);
    let v = Mat::from_row_slice(4, 4, &[a, 0., c, 0., 0., a, 0., -c, c, 0., b, 0., 0., -c, 0., b]);
    let y: f64 = (a + b) * (a + b) - 4.0 * c * c;
    let nm = (y.sqrt() - (b - a)) / 2.0;
    let np = (y.sqrt() + (b - a)) / 2.0;
    let wp = ((a + b + y.sqrt()) / (2.0 * y.sqrt())).sqrt();
    let wm = ((a + b - y.sqrt()) / (2.0 * y.sqrt())).sqrt();
    let s = Mat::from_row_slice(4, 4, &[wp, 0., wm, 0., 0., wp, 0., -wm, wm, 0., wp, 0., 0., -wm, 0., wp]);
    let d = Mat::from_diagonal(&Vector::from_vec(vec![nm, nm, np, np]));
    assert!((&s * d * s.transpose() - &v).amax() < 1e-12);
    let w = williamson(&v).unwrap();
    let mut expect = [nm, np];
    expect.sort_by(f64::total_cmp);
    assert_abs_diff_eq!(w.spectrum[0], expect[0], epsilon = 1e-10);
    assert_abs_diff_eq!(w.spectrum[1], expect[1], epsilon = 1e-10);
}

#[test]
fn williamson_thermal_is_trivial() {
    let v = eye(4) * 3.0;
    let w = williamson(&v).unwrap();
    assert_eq!(w.spectrum.len(), 2);
    assert_abs_diff_eq!(w.spectrum[0], 3.0, epsilon = 1e-12);
    // S is orthogonal-symplectic here; on a degenerate spectrum it is only fixed up to U(N)
    assert!((&w.s.s * w.s.s.transpose() - eye(4)).amax() < 1e-10);
}

#[test]
fn euler_examples() {
    let e = euler(&rotation(0.9).unwrap().s).unwrap();
    assert!(e.squeezings.iter().all(|r| r.abs() < 1e-12));
    let e = euler(&squeeze1(0.4).unwrap().s).unwrap();
    assert_abs_diff_eq!(e.squeezings[0], 0.4, epsilon = 1e-12);
    assert!((e.k.abs() - eye(2)).amax() < 1e-10);
    assert!(euler(&mat2(2.0, 0.0, 0.0, 2.0)).is_err());
}

#[test]
fn euler_random_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=4 {
        let s = common::random_symplectic(n, 6, &mut rng);
        let e = euler(&s).unwrap();
        assert!(e.residual <= 1e-9);
        let om = omega(n);
        for m in [&e.k, &e.l] {
            assert!((m.transpose() * m - eye(2 * n)).amax() < 1e-9);
            assert!((m * &om * m.transpose() - &om).amax() < 1e-9);
        }
    }
}

#[test]
fn purification_examples() {
    let th = make_state(&StateKind::Thermal { n_bar: 1.5 }, 1).unwrap();
    let p = purify(&th).unwrap();
    let nu = 4.0f64;
    let c = (nu * nu - 1.0).sqrt();
    assert_abs_diff_eq!(p.cov[(0, 0)], nu, epsilon = 1e-10);
    assert_abs_diff_eq!(p.cov[(0, 2)].abs(), c, epsilon = 1e-10);
    assert_abs_diff_eq!(p.cov[(1, 3)].abs(), c, epsilon = 1e-10);
    assert!(p.cov[(0, 2)] * p.cov[(1, 3)] < 0.0);
    let pure = make_state(&StateKind::SqueezedVacuum { r: 0.5, theta: 0.3 }, 1).unwrap();
    let pp = purify(&pure).unwrap();
    assert!(pp.cov.view((0, 2), (2, 2)).amax() < 1e-9);
}

#[test]
fn partial_trace_and_permute() {
    let t = tensor(&GaussianState::vacuum(1), &make_state(&StateKind::Thermal { n_bar: 1.0 }, 1).unwrap());
    assert_eq!(t.cov, Mat::from_diagonal(&Vector::from_vec(vec![1., 1., 3., 3.])));
    let r: f64 = 0.7;
    let epr = make_state(&StateKind::Epr { r }, 2).unwrap();
    let a = partial_trace(&epr, &[0]).unwrap();
    let nbar = r.sinh().powi(2);
    assert_abs_diff_eq!(a.cov[(0, 0)], 2.0 * nbar + 1.0, epsilon = 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = common::random_state(3, 2.0, &mut rng);
    let p = permute(&s, &[2, 0, 1]).unwrap();
    let back = permute(&p, &[1, 2, 0]).unwrap();
    assert_eq!(back, s);
    assert!(partial_trace(&s, &[3]).is_err());
    assert!(partial_trace(&s, &[1, 1]).is_err());
}

#[test]
fn entropy_values() {
    assert_eq!(g_function(1.0, LogBase::Two).unwrap(), 0.0);
    assert_abs_diff_eq!(g_function(3.0, LogBase::Two).unwrap(), 2.0, epsilon = 1e-14);
    assert_abs_diff_eq!(g_function(1.0 - 1e-11, LogBase::Two).unwrap(), 0.0);
    assert!(g_function(0.9, LogBase::Two).is_err());
    let epr = make_state(&StateKind::Epr { r: 1.2 }, 2).unwrap();
    assert_abs_diff_eq!(von_neumann_entropy(&epr, LogBase::Two).unwrap(), 0.0, epsilon = 1e-7);
    let th = make_state(&StateKind::Thermal { n_bar: 2.0 }, 1).unwrap();
    assert_eq!(von_neumann_entropy(&th, LogBase::E).unwrap(), g_function(5.0, LogBase::E).unwrap());
}

#[test]
fn wigner_and_char() {
    let v = GaussianState::vacuum(1);
    let w0 = wigner_at(&v, &Vector::zeros(2)).unwrap();
    assert_abs_diff_eq!(w0, 1.0 / (2.0 * std::f64::consts::PI), epsilon = 1e-15);
    assert_eq!(char_fn_at(&v, &Vector::zeros(2)).unwrap(), Complex64::new(1.0, 0.0));

    let s = make_state(&StateKind::GeneralOneMode { n_bar: 0.3, r: 0.4, theta: 0.2, alpha: Complex64::new(0.3, 0.1) }, 1).unwrap();
    let sd = s.cov.diagonal().map(f64::sqrt);
    let (n, h) = (400usize, 16.0 / 400.0);
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = Vector::from_vec(vec![
                s.mean[0] + (i as f64 + 0.5) * h * sd[0] - 8.0 * sd[0],
                s.mean[1] + (j as f64 + 0.5) * h * sd[1] - 8.0 * sd[1],
            ]);
            total += wigner_at(&s, &x).unwrap() * h * h * sd[0] * sd[1];
        }
    }
    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
}

fn cov_strategy(n: usize) -> impl Strategy<Value = Mat> {
    any::<u64>().prop_map(move |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        common::random_cov(n, 3.0, &mut rng)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_congruence_invariant(v in cov_strategy(3), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = common::random_symplectic(3, 5, &mut rng);
        let a = symplectic_eigenvalues(&v).unwrap();
        let b = symplectic_eigenvalues(&(&s * &v * s.transpose())).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-8 * x.max(1.0));
        }
    }

    #[test]
    fn williamson_round_trip(v in cov_strategy(4)) {
        let w = williamson(&v).unwrap();
        prop_assert!(w.residual <= 1e-9);
        prop_assert!(w.s.is_symplectic(1e-8));
        let nu = symplectic_eigenvalues(&v).unwrap();
        for (x, y) in nu.iter().zip(&w.spectrum) {
            prop_assert!((x - y).abs() < 1e-8 * x);
        }
    }

    #[test]
    fn pure_construction_has_unit_spectrum(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = common::random_symplectic(3, 8, &mut rng);
        for nu in symplectic_eigenvalues(&(&s * s.transpose())).unwrap() {
            prop_assert!((nu - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn purification_properties(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = common::random_state(2, 2.0, &mut rng);
        let p = purify(&s).unwrap();
        prop_assert!(p.is_pure(1e-7).unwrap());
        let back = partial_trace(&p, &[0, 1]).unwrap();
        prop_assert!((&back.cov - &s.cov).amax() <= 1e-10 * s.cov.amax().max(1.0));
        prop_assert!((&back.mean - &s.mean).amax() <= 1e-12);
        let sa = von_neumann_entropy(&s, LogBase::Two).unwrap();
        let sr = von_neumann_entropy(&partial_trace(&p, &[2, 3]).unwrap(), LogBase::Two).unwrap();
        prop_assert!((sa - sr).abs() < 1e-7);
    }

    #[test]
    fn constructors_are_valid(nbar in 0.0..5.0f64, r in -2.0..2.0f64, th in -3.0..3.0f64) {
        let kinds = [
            StateKind::Thermal { n_bar: nbar },
            StateKind::SqueezedVacuum { r, theta: th },
            StateKind::GeneralOneMode { n_bar: nbar, r, theta: th, alpha: Complex64::new(r, th) },
        ];
        for k in kinds {
            let st = make_state(&k, 2).unwrap();
            prop_assert!(st.validate().uncertainty_ok);
        }
        let epr = make_state(&StateKind::Epr { r }, 2).unwrap();
        prop_assert!(epr.validate().uncertainty_ok);
    }

    #[test]
    fn thermal_entropy_exact(nbar in 0.0..10.0f64) {
        let th = make_state(&StateKind::Thermal { n_bar: nbar }, 1).unwrap();
        let s = von_neumann_entropy(&th, LogBase::Two).unwrap();
        let g = g_function(2.0 * nbar + 1.0, LogBase::Two).unwrap();
        prop_assert!((s - g).abs() < 1e-10);
    }

    #[test]
    fn apply_keeps_spectrum(v in cov_strategy(2), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = SymplecticTransform::linear(common::random_symplectic(2, 4, &mut rng));
        let st = GaussianState::zero_mean(v).unwrap();
        let out = apply(&st, &s).unwrap();
        let a = st.symplectic_eigenvalues().unwrap()[0];
        let b = out.symplectic_eigenvalues().unwrap()[0];
        prop_assert!((a - b).abs() < 1e-8 * a);
    }
}
