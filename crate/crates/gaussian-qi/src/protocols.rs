//! Teleportation, entanglement swapping, Gaussian cloning and dense coding.

use num_complex::Complex64;

use crate::config::LogBase;
use crate::discrimination::fidelity_1mode;
use crate::entanglement::log_negativity;
use crate::error::{domain, finite, Error, Result};
use crate::linalg::{eye, z2, Mat};
use crate::measurements::{gaussian_povm, HomodyneStep, Quadrature};
use crate::phase_space::{make_state, tensor, GaussianState, StateKind};
use crate::unitaries::{apply, beam_splitter, embed, squeeze2};

fn blocks(resource: &GaussianState) -> Result<(Mat, Mat, Mat)> {
    if resource.n_modes() != 2 {
        return Err(Error::Shape(format!("resource must have two modes, got {}", resource.n_modes())));
    }
    let v = &resource.cov;
    Ok((
        v.view((0, 0), (2, 2)).into_owned(),
        v.view((2, 2), (2, 2)).into_owned(),
        v.view((0, 2), (2, 2)).into_owned(),
    ))
}

/// Γ = 2V_in + ZAZ + B − ZC − CᵀZᵀ.
pub fn teleport_gamma(resource: &GaussianState, v_in: &Mat) -> Result<Mat> {
    let (a, b, c) = blocks(resource)?;
    if v_in.shape() != (2, 2) {
        return Err(Error::Shape(format!("input covariance must be 2x2, got {:?}", v_in.shape())));
    }
    let z = z2();
    Ok(v_in * 2.0 + &z * &a * &z + b - &z * &c - c.transpose() * z.transpose())
}

/// Outcome-averaged fidelity F = 2/√det Γ for a pure one-mode input.
pub fn teleport_fidelity(resource: &GaussianState, v_in: &Mat) -> Result<f64> {
    let input = GaussianState::zero_mean(v_in.clone())?;
    if input.n_modes() != 1 {
        return Err(Error::Shape("input must be a single mode".into()));
    }
    if (v_in.determinant() - 1.0).abs() > 1e-8 {
        return Err(Error::Precondition("teleportation fidelity formula needs a pure input".into()));
    }
    let det = teleport_gamma(resource, v_in)?.determinant();
    if det <= 0.0 {
        return Err(Error::Numerical(format!("det Γ = {det} is not positive")));
    }
    Ok(2.0 / det.sqrt())
}

/// γ̃ = [(q̄_b − q̄_a) − i(p̄_b + p̄_a)] / 2√2, added to Bob's displacement.
pub fn resource_mean_correction(resource: &GaussianState) -> Result<Complex64> {
    blocks(resource)?;
    let x = &resource.mean;
    let k = 2.0 * std::f64::consts::SQRT_2;
    Ok(Complex64::new((x[2] - x[0]) / k, -(x[3] + x[1]) / k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FidelityBand {
    Classical,
    Quantum,
    NoCloning,
}

/// Classical for F ≤ ½, quantum for ½ < F ≤ ⅔, no-cloning above ⅔.
pub fn classify_fidelity(f: f64) -> Result<FidelityBand> {
    if !(0.0..=1.0).contains(&f) {
        return domain(format!("fidelity must lie in [0,1], got {f}"));
    }
    Ok(if f <= 0.5 {
        FidelityBand::Classical
    } else if f <= 2.0 / 3.0 {
        FidelityBand::Quantum
    } else {
        FidelityBand::NoCloning
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapResult {
    /// Modes (a, b) after Bob's correction.
    pub state: GaussianState,
    /// In nats.
    pub log_negativity: f64,
}

/// Swapping with Bell outcomes (q₋, p₊) = (0, 0).
pub fn entanglement_swap(r_alice: f64, r_bob: f64) -> Result<SwapResult> {
    entanglement_swap_with(r_alice, r_bob, [0.0, 0.0])
}

/// Modes a, a′ (EPR r_alice) and b′, b (EPR r_bob). a′ and b′ are mixed on a
/// balanced beam splitter; q is read on the b′ port and p on the a′ port, and b
/// is displaced by (−√2 m_q, √2 m_p).
pub fn entanglement_swap_with(r_alice: f64, r_bob: f64, outcomes: [f64; 2]) -> Result<SwapResult> {
    for (name, r) in [("r_alice", r_alice), ("r_bob", r_bob)] {
        finite(name, r)?;
        if r < 0.0 {
            return domain(format!("{name} must be non-negative, got {r}"));
        }
    }
    let ea = make_state(&StateKind::Epr { r: r_alice }, 2)?;
    let eb = make_state(&StateKind::Epr { r: r_bob }, 2)?;
    let bs = embed(&beam_splitter(0.5)?, &[1, 2], 4)?;
    let plan = [
        HomodyneStep { mode: 2, quadrature: Quadrature::Q, outcome: outcomes[0] },
        HomodyneStep { mode: 1, quadrature: Quadrature::P, outcome: outcomes[1] },
    ];
    let rec = gaussian_povm(&ea, &eb, &bs, &plan)?;
    let g = std::f64::consts::SQRT_2;
    let mut state = rec.conditioned;
    state.mean[2] -= g * outcomes[0];
    state.mean[3] += g * outcomes[1];
    let log_negativity = log_negativity(&state, &[1], LogBase::E)?;
    Ok(SwapResult { state, log_negativity })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloneOutput {
    pub clone1: GaussianState,
    pub clone2: GaussianState,
    pub anticlone: GaussianState,
    /// Fidelity of each clone with the input.
    pub f_clone: f64,
    /// Fidelity of the anticlone with the phase-conjugated input.
    pub f_anticlone: f64,
}

/// (B ⊕ I)(I ⊕ S₂) on modes (1, 2, 3), input on mode 2, cosh²r = 2.
pub fn cloning_map() -> Result<Mat> {
    let r = std::f64::consts::SQRT_2.acosh();
    let amp = embed(&squeeze2(r)?, &[1, 2], 3)?;
    let bs = embed(&beam_splitter(0.5)?, &[0, 1], 3)?;
    Ok(&bs.s * &amp.s)
}

fn conjugate(state: &GaussianState) -> GaussianState {
    let z = z2();
    GaussianState::from_parts(&z * &state.mean, &z * &state.cov * &z)
}

/// Symmetric 1→2 Gaussian cloner run as a circuit on input ⊕ two vacua.
pub fn clone_1to2(input: &GaussianState) -> Result<CloneOutput> {
    if input.n_modes() != 1 {
        return Err(Error::Shape(format!("cloner takes one mode, got {}", input.n_modes())));
    }
    let vac = GaussianState::vacuum(1);
    let joint = tensor(&tensor(&vac, input), &vac);
    let out = apply(&joint, &crate::phase_space::SymplecticTransform::linear(cloning_map()?))?;
    let pick = |k: usize| GaussianState::from_parts(out.mean.rows(2 * k, 2).into_owned(), out.mode_cov(k));
    let (clone1, clone2, anticlone) = (pick(0), pick(1), pick(2));
    let f_clone = fidelity_1mode(input, &clone1)?;
    let f_anticlone = fidelity_1mode(&conjugate(input), &anticlone)?;
    Ok(CloneOutput { clone1, clone2, anticlone, f_clone, f_anticlone })
}

/// Closed-form output covariances (V_in + I, V_in + I, ZV_inZ + 2I).
pub fn clone_covariances(v_in: &Mat) -> (Mat, Mat, Mat) {
    let z = z2();
    let c = v_in + eye(2);
    (c.clone(), c, &z * v_in * &z + eye(2) * 2.0)
}

/// Optimal Gaussian N→M cloning fidelity for coherent states.
pub fn mn_clone_fidelity(n_in: u32, m_out: u32) -> Result<f64> {
    if n_in == 0 {
        return domain("need at least one input copy");
    }
    if m_out < n_in {
        return domain(format!("M = {m_out} is smaller than N = {n_in}"));
    }
    let (n, m) = (n_in as f64, m_out as f64);
    Ok(m * n / (m * n + m - n))
}

fn dense_coding_arg(m_bar: f64, v_sq: f64, eta: f64) -> Result<f64> {
    finite("m_bar", m_bar)?;
    finite("v_sq", v_sq)?;
    finite("eta", eta)?;
    if m_bar < 0.0 {
        return domain(format!("m_bar must be non-negative, got {m_bar}"));
    }
    if !(v_sq > 0.0 && v_sq <= 1.0) {
        return domain(format!("v_sq must lie in (0,1], got {v_sq}"));
    }
    if !(0.0..=1.0).contains(&eta) {
        return domain(format!("eta must lie in [0,1], got {eta}"));
    }
    Ok(1.0 + eta * (4.0 * m_bar - v_sq - 1.0 / v_sq + 2.0) / (4.0 * (eta * v_sq + 1.0 - eta)))
}

/// Dense-coding rate over the identity channel with Bell-detection efficiency η.
pub fn dense_coding_rate(m_bar: f64, v_sq: f64, eta: f64, base: LogBase) -> Result<f64> {
    let x = dense_coding_arg(m_bar, v_sq, eta)?;
    if x <= 0.0 {
        return domain(format!("squeezing V_sq = {v_sq} is not affordable with m̄ = {m_bar}"));
    }
    Ok(base.log(x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseCodingPoint {
    pub v_sq: f64,
    pub eta: f64,
    pub rate: f64,
    pub capacity: f64,
}

/// Grid points where the dense-coding rate beats g(2m̄ + 1).
pub fn dense_coding_advantage(m_bar: f64, v_grid: &[f64], eta_grid: &[f64], base: LogBase) -> Result<Vec<DenseCodingPoint>> {
    let capacity = crate::phase_space::g_function(2.0 * m_bar + 1.0, base)?;
    let mut out = Vec::new();
    for &v_sq in v_grid {
        for &eta in eta_grid {
            let x = dense_coding_arg(m_bar, v_sq, eta)?;
            if x > 0.0 && base.log(x) > capacity {
                out.push(DenseCodingPoint { v_sq, eta, rate: base.log(x), capacity });
            }
        }
    }
    Ok(out)
}
