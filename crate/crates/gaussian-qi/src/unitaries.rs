//! Named Gaussian unitaries as symplectic transforms.

use num_complex::Complex64;

use crate::error::{domain, finite, Error, Result};
use crate::linalg::{blocks2, eye, mat2, z2, Mat, Vector};
use crate::phase_space::{rotation_matrix, GaussianState, SymplecticTransform};

/// Placement of √τ in the beam-splitter matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BeamSplitterConvention {
    /// √τ on the diagonal; τ = 1 is fully transmissive.
    #[default]
    Transmissive,
    /// √(1−τ) on the diagonal, as printed for the isolated beam splitter.
    PaperEq50,
}

pub fn displacement(alpha: &[Complex64]) -> Result<SymplecticTransform> {
    for a in alpha {
        finite("alpha", a.re)?;
        finite("alpha", a.im)?;
    }
    let d = Vector::from_iterator(2 * alpha.len(), alpha.iter().flat_map(|a| [2.0 * a.re, 2.0 * a.im]));
    SymplecticTransform::new(eye(2 * alpha.len()), d)
}

/// Displacement by a raw quadrature vector.
pub fn displacement_vec(d: Vector) -> SymplecticTransform {
    let n = d.len();
    SymplecticTransform { s: eye(n), d }
}

pub fn rotation(theta: f64) -> Result<SymplecticTransform> {
    finite("theta", theta)?;
    Ok(SymplecticTransform::linear(rotation_matrix(theta)))
}

/// S(r) = diag(e^{−r}, e^{r}).
pub fn squeeze1(r: f64) -> Result<SymplecticTransform> {
    finite("r", r)?;
    Ok(SymplecticTransform::linear(mat2((-r).exp(), 0.0, 0.0, r.exp())))
}

/// P(η): q → q, p → p + ηq.
pub fn phase_gate(eta: f64) -> Result<SymplecticTransform> {
    finite("eta", eta)?;
    Ok(SymplecticTransform::linear(mat2(1.0, 0.0, eta, 1.0)))
}

/// F: q → −p, p → q.
pub fn fourier() -> SymplecticTransform {
    SymplecticTransform::linear(mat2(0.0, -1.0, 1.0, 0.0))
}

pub fn beam_splitter(tau: f64) -> Result<SymplecticTransform> {
    beam_splitter_with(tau, BeamSplitterConvention::Transmissive)
}

pub fn beam_splitter_with(tau: f64, conv: BeamSplitterConvention) -> Result<SymplecticTransform> {
    finite("tau", tau)?;
    if !(0.0..=1.0).contains(&tau) {
        return domain(format!("beam splitter transmissivity must lie in [0,1], got {tau}"));
    }
    let (a, b) = match conv {
        BeamSplitterConvention::Transmissive => (tau.sqrt(), (1.0 - tau).sqrt()),
        BeamSplitterConvention::PaperEq50 => ((1.0 - tau).sqrt(), tau.sqrt()),
    };
    let i = eye(2);
    Ok(SymplecticTransform::linear(blocks2(&(&i * a), &(&i * b), &(&i * -b), &(&i * a))))
}

pub fn squeeze2(r: f64) -> Result<SymplecticTransform> {
    finite("r", r)?;
    let (c, s) = (r.cosh(), r.sinh());
    let i = eye(2);
    let z = z2();
    Ok(SymplecticTransform::linear(blocks2(&(&i * c), &(&z * s), &(&z * s), &(&i * c))))
}

/// Weighted controlled-Z: p1 → p1 + g q2, p2 → p2 + g q1.
pub fn cz_gate(g: f64) -> Result<SymplecticTransform> {
    finite("g", g)?;
    let mut s = eye(4);
    s[(1, 2)] = g;
    s[(3, 0)] = g;
    Ok(SymplecticTransform::linear(s))
}

pub fn apply(state: &GaussianState, t: &SymplecticTransform) -> Result<GaussianState> {
    if t.s.nrows() != state.cov.nrows() {
        return Err(Error::Shape(format!(
            "transform acts on {} modes, state has {}",
            t.n_modes(),
            state.n_modes()
        )));
    }
    let mean = &t.s * &state.mean + &t.d;
    let cov = &t.s * &state.cov * t.s.transpose();
    Ok(GaussianState::from_parts(mean, cov))
}

/// Lifts a transform on `targets.len()` modes into an `n_total`-mode system.
pub fn embed(t: &SymplecticTransform, targets: &[usize], n_total: usize) -> Result<SymplecticTransform> {
    if targets.len() != t.n_modes() {
        return Err(Error::Index(format!("transform has {} modes but {} targets were given", t.n_modes(), targets.len())));
    }
    for (i, &m) in targets.iter().enumerate() {
        if m >= n_total {
            return Err(Error::Index(format!("target mode {m} out of range for {n_total} modes")));
        }
        if targets[..i].contains(&m) {
            return Err(Error::Index(format!("target mode {m} repeated")));
        }
    }
    let idx: Vec<usize> = targets.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
    let mut s: Mat = eye(2 * n_total);
    let mut d = Vector::zeros(2 * n_total);
    for (a, &ia) in idx.iter().enumerate() {
        d[ia] = t.d[a];
        for (b, &ib) in idx.iter().enumerate() {
            s[(ia, ib)] = t.s[(a, b)];
        }
    }
    Ok(SymplecticTransform { s, d })
}

/// Shorthand for `apply(state, embed(t, targets, N))`.
pub fn apply_on(state: &GaussianState, t: &SymplecticTransform, targets: &[usize]) -> Result<GaussianState> {
    apply(state, &embed(t, targets, state.n_modes())?)
}
