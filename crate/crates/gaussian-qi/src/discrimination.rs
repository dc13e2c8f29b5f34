//! Binary discrimination of Gaussian states and coherent-state receivers.

use statrs::function::erf::{erf, erfc};

use crate::error::{domain, finite, Error, Result};
use crate::linalg::{eye, Mat, Vector};
use crate::phase_space::{williamson, GaussianState};

/// Two equiprobable hypotheses, each available in `copies` copies.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryHypothesis {
    pub rho0: GaussianState,
    pub rho1: GaussianState,
    pub copies: u32,
}

impl BinaryHypothesis {
    pub fn new(rho0: GaussianState, rho1: GaussianState) -> Result<Self> {
        if rho0.n_modes() != rho1.n_modes() {
            return Err(Error::Shape(format!("hypotheses have {} and {} modes", rho0.n_modes(), rho1.n_modes())));
        }
        Ok(BinaryHypothesis { rho0, rho1, copies: 1 })
    }
}

/// Minimum error for two pure states with |⟨ψ0|ψ1⟩|² = `overlap2`.
pub fn helstrom_pure(overlap2: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&overlap2) {
        return domain(format!("squared overlap must lie in [0,1], got {overlap2}"));
    }
    Ok(0.5 * (1.0 - (1.0 - overlap2).sqrt()))
}

/// Spectral threshold below which a mode is treated as exactly pure.
const PURE_FAST_PATH: f64 = 1e-12;

fn pow_pair(x: f64, s: f64) -> (f64, f64) {
    let plus = (x + 1.0).powf(s);
    let minus = if x <= 1.0 + PURE_FAST_PATH { 0.0 } else { (x - 1.0).powf(s) };
    (plus, minus)
}

/// G_s(x) = 2^s / [(x+1)^s − (x−1)^s].
pub fn g_s(x: f64, s: f64) -> f64 {
    let (p, m) = pow_pair(x, s);
    2f64.powf(s) / (p - m)
}

/// Λ_s(x) = [(x+1)^s + (x−1)^s] / [(x+1)^s − (x−1)^s].
pub fn lambda_s(x: f64, s: f64) -> f64 {
    let (p, m) = pow_pair(x, s);
    (p + m) / (p - m)
}

struct Williamsons {
    s0: Mat,
    nu0: Vec<f64>,
    s1: Mat,
    nu1: Vec<f64>,
    d: Vector,
}

fn prepare(h: &BinaryHypothesis) -> Result<Williamsons> {
    let w0 = williamson(&h.rho0.cov)?;
    let w1 = williamson(&h.rho1.cov)?;
    Ok(Williamsons { s0: w0.s.s, nu0: w0.spectrum, s1: w1.s.s, nu1: w1.spectrum, d: &h.rho0.mean - &h.rho1.mean })
}

fn diag_of(nu: &[f64], f: impl Fn(f64) -> f64) -> Mat {
    Mat::from_diagonal(&Vector::from_iterator(2 * nu.len(), nu.iter().flat_map(|&x| [f(x); 2])))
}

fn cs_prepared(w: &Williamsons, s: f64) -> Result<f64> {
    let n = w.nu0.len();
    let log_det_pi: f64 = w.nu0.iter().map(|&x| 2.0 * g_s(x, s).ln()).sum::<f64>()
        + w.nu1.iter().map(|&x| 2.0 * g_s(x, 1.0 - s).ln()).sum::<f64>();
    let sigma = &w.s0 * diag_of(&w.nu0, |x| lambda_s(x, s)) * w.s0.transpose()
        + &w.s1 * diag_of(&w.nu1, |x| lambda_s(x, 1.0 - s)) * w.s1.transpose();
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical(format!("Σ_s is singular at s = {s}")))?;
    let log_det_sigma = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let quad = w.d.dot(&chol.solve(&w.d));
    Ok((n as f64 * 2f64.ln() + 0.5 * (log_det_pi - log_det_sigma) - 0.5 * quad).exp())
}

/// C_s = Tr(ρ0^s ρ1^{1−s}) by the multimode Gaussian formula.
pub fn chernoff_cs(h: &BinaryHypothesis, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return domain(format!("s must lie in (0,1), got {s}"));
    }
    cs_prepared(&prepare(h)?, s)
}

pub const CHERNOFF_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffResult {
    pub p_qc: f64,
    pub s_opt: f64,
    /// inf_s C_s
    pub c_min: f64,
}

/// Brent minimization of `f` on [a, b].
pub fn brent_min(f: impl Fn(f64) -> Result<f64>, a: f64, b: f64, tol: f64, max_iter: usize) -> Result<(f64, f64)> {
    let golden = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (a, b);
    let mut x = a + golden * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x)?;
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e): (f64, f64) = (0.0, 0.0);
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-12;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            return Ok((x, fx));
        }
        let mut use_golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if m > x { tol1 } else { -tol1 };
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x < m { b - x } else { a - x };
            d = golden * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u)?;
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Err(Error::Numerical(format!("Brent minimization did not converge in {max_iter} iterations (last x = {x})")))
}

/// Quantum Chernoff bound p_QC = ½ inf_s C_s.
pub fn chernoff_bound(h: &BinaryHypothesis) -> Result<ChernoffResult> {
    let w = prepare(h)?;
    let f = |s: f64| cs_prepared(&w, s).map(f64::ln);
    let (s_opt, lmin) = brent_min(f, CHERNOFF_EPS, 1.0 - CHERNOFF_EPS, 1e-10, 200)?;
    let mut best = (s_opt, lmin);
    for s in [CHERNOFF_EPS, 1.0 - CHERNOFF_EPS] {
        let v = f(s)?;
        if v < best.1 {
            best = (s, v);
        }
    }
    let c_min = best.1.exp().min(1.0);
    Ok(ChernoffResult { p_qc: 0.5 * c_min, s_opt: best.0, c_min })
}

/// Quantum Bhattacharyya bound ½ C_{1/2}.
pub fn bhattacharyya(h: &BinaryHypothesis) -> Result<f64> {
    Ok(0.5 * chernoff_cs(h, 0.5)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MulticopyBounds {
    pub p_qc: f64,
    pub p_b: f64,
    /// Error exponent −ln inf_s C_s.
    pub kappa: f64,
}

pub fn multicopy_bounds(h: &BinaryHypothesis) -> Result<MulticopyBounds> {
    if h.copies == 0 {
        return domain("copies must be at least 1");
    }
    let c = chernoff_bound(h)?;
    let cb = chernoff_cs(h, 0.5)?;
    let m = h.copies as i32;
    Ok(MulticopyBounds { p_qc: 0.5 * c.c_min.powi(m), p_b: 0.5 * cb.powi(m), kappa: -c.c_min.ln() })
}

/// Fidelity (squared Uhlmann) of two single-mode Gaussian states.
pub fn fidelity_1mode(rho0: &GaussianState, rho1: &GaussianState) -> Result<f64> {
    if rho0.n_modes() != 1 || rho1.n_modes() != 1 {
        return Err(Error::Unsupported("closed-form fidelity is available for single-mode states only".into()));
    }
    let sum = &rho0.cov + &rho1.cov;
    let delta_big = sum.determinant();
    let delta_small = ((rho0.cov.determinant() - 1.0) * (rho1.cov.determinant() - 1.0)).max(0.0);
    let d = &rho0.mean - &rho1.mean;
    let inv = sum.try_inverse().ok_or_else(|| Error::Numerical("V0 + V1 is singular".into()))?;
    let pref = 2.0 / ((delta_big + delta_small).sqrt() - delta_small.sqrt());
    Ok(pref * (-0.5 * d.dot(&(inv * &d))).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityBounds {
    pub lower: f64,
    pub upper: f64,
}

/// F₋ = ½(1 − √(1−F)), F₊ = ½√F.
pub fn fidelity_bounds(f: f64) -> Result<FidelityBounds> {
    if !(0.0..=1.0 + 1e-12).contains(&f) {
        return domain(format!("fidelity must lie in [0,1], got {f}"));
    }
    let f = f.min(1.0);
    Ok(FidelityBounds { lower: 0.5 * (1.0 - (1.0 - f).sqrt()), upper: 0.5 * f.sqrt() })
}

/// BPSK receivers for the alphabet {|α⟩, |−α⟩}, α ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Receiver {
    Helstrom,
    Kennedy,
    Homodyne,
    /// Optimized displacement receiver with detector efficiency τ and displacement β.
    Odr { tau: f64, beta: f64 },
}

fn check_alpha(alpha: f64) -> Result<()> {
    finite("alpha", alpha)?;
    if alpha < 0.0 {
        return domain(format!("alpha must be >= 0, got {alpha}"));
    }
    Ok(())
}

pub fn receiver_pe(kind: Receiver, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let a2 = alpha * alpha;
    match kind {
        Receiver::Helstrom => helstrom_pure((-4.0 * a2).exp()),
        Receiver::Kennedy => Ok(0.5 * (-4.0 * a2).exp()),
        Receiver::Homodyne => Ok(homodyne_pe(alpha)),
        Receiver::Odr { tau, beta } => {
            if !(0.0..=1.0).contains(&tau) {
                return domain(format!("detector efficiency must lie in [0,1], got {tau}"));
            }
            finite("beta", beta)?;
            Ok(0.5 - (-(tau * a2 + beta * beta)).exp() * (2.0 * tau.sqrt() * alpha * beta).sinh())
        }
    }
}

/// ½ erfc(√2 α): sign decision on the q-marginal N(±2α, 1).
pub fn homodyne_pe(alpha: f64) -> f64 {
    0.5 * erfc(std::f64::consts::SQRT_2 * alpha)
}

/// The printed ½(1 − erf(α/2)), kept for comparison.
pub fn homodyne_pe_printed(alpha: f64) -> f64 {
    0.5 * (1.0 - erf(alpha / 2.0))
}

/// Homodyne error by numerically integrating the q-marginal of |−α⟩ over q > 0.
pub fn homodyne_pe_numeric(alpha: f64) -> f64 {
    let mu = -2.0 * alpha;
    let hi = (mu + 12.0).max(1.0);
    let n = 4000;
    let h = hi / n as f64;
    let pdf = |x: f64| (-(x - mu).powi(2) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(0.0) + pdf(hi);
    for i in 1..n {
        s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Optimal ODR displacement: β tanh(2√τ α β) = √τ α.
pub fn odr_optimize(alpha: f64, tau: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if !(0.0..=1.0).contains(&tau) {
        return domain(format!("detector efficiency must lie in [0,1], got {tau}"));
    }
    let c = tau.sqrt() * alpha;
    if c == 0.0 {
        return Ok((0.0, 0.5));
    }
    let h = |b: f64| b * (2.0 * c * b).tanh() - c;
    let (mut lo, mut hi) = (0.0, c + 1.0);
    while h(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = 0.5 * (lo + hi);
    Ok((beta, receiver_pe(Receiver::Odr { tau, beta }, alpha)?))
}

/// Vacuum against the coherent state with quadrature mean `d`.
pub fn coherent_pair(d: &[f64]) -> Result<BinaryHypothesis> {
    let n = d.len() / 2;
    let z = GaussianState::new(Vector::zeros(2 * n), eye(2 * n))?;
    let one = GaussianState::new(Vector::from_row_slice(d), eye(2 * n))?;
    BinaryHypothesis::new(z, one)
}
