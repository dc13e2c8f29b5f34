//! Homodyne and heterodyne conditioning, outcome statistics and sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, finite, Error, Result};
use crate::linalg::{eye, mat2, mode_indices, submatrix, subvector, Mat, Vector};
use crate::phase_space::{rotation_matrix, tensor, GaussianState, SymplecticTransform};
use crate::unitaries::{apply, apply_on};

/// Measured quadrature `cos θ q + sin θ p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quadrature {
    Q,
    P,
    Angle(f64),
}

impl Quadrature {
    /// Rotation that brings the measured quadrature onto q.
    fn alignment(self) -> Mat {
        match self {
            Quadrature::Q => eye(2),
            Quadrature::P => mat2(0.0, 1.0, -1.0, 0.0),
            Quadrature::Angle(t) => rotation_matrix(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasurementKind {
    Homodyne(Quadrature),
    Heterodyne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub outcome: Vec<f64>,
    pub conditioned: GaussianState,
}

/// Gaussian law of the outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub mean: Vector,
    pub cov: Mat,
}

fn check_mode(state: &GaussianState, mode: usize) -> Result<()> {
    if mode >= state.n_modes() {
        return Err(Error::Index(format!("mode {mode} out of range for {} modes", state.n_modes())));
    }
    Ok(())
}

fn rest_of(n: usize, mode: usize) -> Vec<usize> {
    (0..n).filter(|&k| k != mode).collect()
}

/// Blocks (x_A, x_B, A, B, C) with B the measured mode.
fn split(state: &GaussianState, mode: usize) -> (Vector, Vector, Mat, Mat, Mat) {
    let ia = mode_indices(&rest_of(state.n_modes(), mode));
    let ib = mode_indices(&[mode]);
    (
        subvector(&state.mean, &ia),
        subvector(&state.mean, &ib),
        submatrix(&state.cov, &ia, &ia),
        submatrix(&state.cov, &ib, &ib),
        submatrix(&state.cov, &ia, &ib),
    )
}

fn aligned(state: &GaussianState, mode: usize, quad: Quadrature) -> Result<GaussianState> {
    match quad {
        Quadrature::Q => Ok(state.clone()),
        _ => apply_on(state, &SymplecticTransform::linear(quad.alignment()), &[mode]),
    }
}

/// Conditions on the outcome `m` of a homodyne measurement of `mode`.
///
/// V = A − C(ΠBΠ)⁺Cᵀ with (ΠBΠ)⁺ = Π/B₁₁.
pub fn homodyne_condition(state: &GaussianState, mode: usize, quad: Quadrature, m: f64) -> Result<MeasurementRecord> {
    check_mode(state, mode)?;
    finite("outcome", m)?;
    if state.n_modes() < 2 {
        return domain("homodyne conditioning needs at least two modes");
    }
    let st = aligned(state, mode, quad)?;
    let (xa, xb, a, b, c) = split(&st, mode);
    let b11 = b[(0, 0)];
    if b11 <= 0.0 {
        return Err(Error::Numerical(format!("measured variance {b11} is not positive")));
    }
    let c0 = c.column(0).into_owned();
    let cov = &a - &c0 * c0.transpose() / b11;
    let mean = &xa + &c0 * ((m - xb[0]) / b11);
    Ok(MeasurementRecord { outcome: vec![m], conditioned: GaussianState::from_parts(mean, cov) })
}

/// Conditions on a heterodyne outcome `(q_m, p_m)` of `mode`.
///
/// V = A − C(B+I)⁻¹Cᵀ.
pub fn heterodyne_condition(state: &GaussianState, mode: usize, m: [f64; 2]) -> Result<MeasurementRecord> {
    check_mode(state, mode)?;
    finite("outcome", m[0])?;
    finite("outcome", m[1])?;
    if state.n_modes() < 2 {
        return domain("heterodyne conditioning needs at least two modes");
    }
    let (xa, xb, a, b, c) = split(state, mode);
    let inv = (b + eye(2))
        .try_inverse()
        .ok_or_else(|| Error::Numerical("B + I is singular".into()))?;
    let cov = &a - &c * &inv * c.transpose();
    let mean = &xa + &c * inv * (Vector::from_row_slice(&m) - xb);
    Ok(MeasurementRecord { outcome: m.to_vec(), conditioned: GaussianState::from_parts(mean, cov) })
}

/// Alternate closed form A − Θ⁻¹C(ωBωᵀ + I)Cᵀ, Θ = det B + Tr B + 1.
pub fn heterodyne_cov_theta_form(state: &GaussianState, mode: usize) -> Result<Mat> {
    check_mode(state, mode)?;
    let (_, _, a, b, c) = split(state, mode);
    let w = mat2(0.0, 1.0, -1.0, 0.0);
    let theta = b.determinant() + b.trace() + 1.0;
    Ok(&a - &c * (&w * &b * w.transpose() + eye(2)) * c.transpose() / theta)
}

pub fn outcome_distribution(state: &GaussianState, mode: usize, kind: MeasurementKind) -> Result<OutcomeDistribution> {
    check_mode(state, mode)?;
    match kind {
        MeasurementKind::Homodyne(q) => {
            let st = aligned(state, mode, q)?;
            Ok(OutcomeDistribution {
                mean: Vector::from_element(1, st.mean[2 * mode]),
                cov: Mat::from_element(1, 1, st.cov[(2 * mode, 2 * mode)]),
            })
        }
        MeasurementKind::Heterodyne => {
            let ib = mode_indices(&[mode]);
            Ok(OutcomeDistribution {
                mean: subvector(&state.mean, &ib),
                cov: submatrix(&state.cov, &ib, &ib) + eye(2),
            })
        }
    }
}

fn draw(dist: &OutcomeDistribution, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let l = dist
        .cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("outcome covariance is not positive definite".into()))?
        .l();
    let z = Vector::from_iterator(dist.mean.len(), (0..dist.mean.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
    Ok((&dist.mean + l * z).iter().copied().collect())
}

/// Draws an outcome and conditions the remaining modes on it.
pub fn sample_with(state: &GaussianState, mode: usize, kind: MeasurementKind, rng: &mut impl Rng) -> Result<MeasurementRecord> {
    let dist = outcome_distribution(state, mode, kind)?;
    let out = draw(&dist, rng)?;
    match kind {
        MeasurementKind::Homodyne(q) => homodyne_condition(state, mode, q, out[0]),
        MeasurementKind::Heterodyne => heterodyne_condition(state, mode, [out[0], out[1]]),
    }
}

pub fn sample(state: &GaussianState, mode: usize, kind: MeasurementKind, seed: u64) -> Result<MeasurementRecord> {
    sample_with(state, mode, kind, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Draws only the outcome (no conditioning); works on single-mode states.
pub fn sample_outcome(state: &GaussianState, mode: usize, kind: MeasurementKind, rng: &mut impl Rng) -> Result<Vec<f64>> {
    draw(&outcome_distribution(state, mode, kind)?, rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneStep {
    /// Mode index in the joint system (input modes first, then ancilla).
    pub mode: usize,
    pub quadrature: Quadrature,
    pub outcome: f64,
}

/// Gaussian POVM as ancilla + coupling unitary + homodynes.
///
/// The conditioned state keeps the unmeasured joint modes in their original order.
pub fn gaussian_povm(
    state: &GaussianState,
    ancilla: &GaussianState,
    coupling: &SymplecticTransform,
    plan: &[HomodyneStep],
) -> Result<MeasurementRecord> {
    let joint = tensor(state, ancilla);
    let mut cur = apply(&joint, coupling)?;
    let mut alive: Vec<usize> = (0..joint.n_modes()).collect();
    let mut outcome = Vec::with_capacity(plan.len());
    for (i, step) in plan.iter().enumerate() {
        if plan[..i].iter().any(|s| s.mode == step.mode) {
            return domain(format!("mode {} measured twice", step.mode));
        }
        let pos = alive
            .iter()
            .position(|&m| m == step.mode)
            .ok_or_else(|| Error::Index(format!("mode {} not in the joint system", step.mode)))?;
        cur = homodyne_condition(&cur, pos, step.quadrature, step.outcome)?.conditioned;
        alive.remove(pos);
        outcome.push(step.outcome);
    }
    Ok(MeasurementRecord { outcome, conditioned: cur })
}
