#![allow(dead_code)]

use gaussian_qi::linalg::{eye, Mat, Vector};
use gaussian_qi::phase_space::{GaussianState, SymplecticTransform};
use gaussian_qi::unitaries::{beam_splitter, embed, rotation, squeeze1};
use rand::Rng;

/// Product of `factors` random elementary symplectic maps on `n` modes.
pub fn random_symplectic(n: usize, factors: usize, rng: &mut impl Rng) -> Mat {
    let mut s = eye(2 * n);
    for _ in 0..factors {
        let m = rng.random_range(0..n);
        let t: SymplecticTransform = match rng.random_range(0..3) {
            0 => embed(&rotation(rng.random_range(-3.0..3.0)).unwrap(), &[m], n).unwrap(),
            1 => embed(&squeeze1(rng.random_range(-1.0..1.0)).unwrap(), &[m], n).unwrap(),
            _ if n > 1 => {
                let mut o = rng.random_range(0..n);
                while o == m {
                    o = rng.random_range(0..n);
                }
                embed(&beam_splitter(rng.random_range(0.0..1.0)).unwrap(), &[m, o], n).unwrap()
            }
            _ => embed(&rotation(0.7).unwrap(), &[m], n).unwrap(),
        };
        s = t.s * s;
    }
    s
}

/// Random valid covariance S diag(ν) Sᵀ with ν ∈ [1, 1 + spread].
pub fn random_cov(n: usize, spread: f64, rng: &mut impl Rng) -> Mat {
    let s = random_symplectic(n, 3 * n + 2, rng);
    let d = Vector::from_iterator(2 * n, (0..n).flat_map(|_| {
        let v = 1.0 + rng.random_range(0.0..spread);
        [v, v]
    }));
    let c = &s * Mat::from_diagonal(&d) * s.transpose();
    (&c + c.transpose()) * 0.5
}

pub fn random_state(n: usize, spread: f64, rng: &mut impl Rng) -> GaussianState {
    let cov = random_cov(n, spread, rng);
    let mean = Vector::from_iterator(2 * n, (0..2 * n).map(|_| rng.random_range(-2.0..2.0)));
    GaussianState::new(mean, cov).unwrap()
}

/// Least-squares slope of y against x.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
