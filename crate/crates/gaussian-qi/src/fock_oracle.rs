//! Truncated number-basis oracle.
//!
//! Builds density matrices from number-state expansions and computes
//! distinguishability measures by dense Hermitian diagonalization. Used to
//! cross-check the phase-space formulas; it knows nothing about covariances.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{domain, finite, Error, Result};
use crate::linalg::{Mat, Vector};
use crate::phase_space::{make_state, GaussianState, StateKind};

pub type CMat = DMatrix<Complex64>;

pub const DEFAULT_CUTOFF: usize = 40;
/// Maximum probability mass allowed outside the truncated space.
pub const NORM_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FockKind {
    Coherent { alpha: Complex64 },
    /// Vacuum squeezed along q for r > 0.
    SqueezedVacuum { r: f64 },
    Thermal { n_bar: f64 },
    /// Two-mode squeezed vacuum; basis index `n_a * cutoff + n_b`.
    Epr { r: f64 },
    /// S₂(r) [ρ_th(n_a) ⊗ ρ_th(n_b)] S₂(r)†, built by exponentiating the
    /// truncated generator on a padded space.
    SqueezedThermal2 { r: f64, n_a: f64, n_b: f64 },
}

impl FockKind {
    pub fn n_modes(&self) -> usize {
        match self {
            FockKind::Epr { .. } | FockKind::SqueezedThermal2 { .. } => 2,
            _ => 1,
        }
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn pure(amps: &DVector<Complex64>) -> CMat {
    amps * amps.adjoint()
}

fn guard(mass: f64, cutoff: usize) -> Result<()> {
    if mass < 1.0 - NORM_GUARD {
        return domain(format!("cutoff {cutoff} keeps only {mass:.10} of the state's norm"));
    }
    Ok(())
}

pub fn fock_state(kind: FockKind, cutoff: usize) -> Result<CMat> {
    if cutoff < 2 {
        return domain("cutoff must be at least 2");
    }
    match kind {
        FockKind::Coherent { alpha } => {
            finite("alpha", alpha.re)?;
            finite("alpha", alpha.im)?;
            let mut v = DVector::from_element(cutoff, c(0.0));
            v[0] = c((-0.5 * alpha.norm_sqr()).exp());
            for n in 1..cutoff {
                v[n] = v[n - 1] * alpha / (n as f64).sqrt();
            }
            guard(v.norm_squared(), cutoff)?;
            Ok(pure(&v))
        }
        FockKind::SqueezedVacuum { r } => {
            finite("r", r)?;
            let t = -r.tanh();
            let mut v = DVector::from_element(cutoff, c(0.0));
            let mut amp = 1.0 / r.cosh().sqrt();
            v[0] = c(amp);
            let mut k = 1;
            while 2 * k < cutoff {
                // √((2k)!)/(2^k k!) recursion
                amp *= t * ((2 * k) as f64 * (2 * k - 1) as f64).sqrt() / (2.0 * k as f64);
                v[2 * k] = c(amp);
                k += 1;
            }
            guard(v.norm_squared(), cutoff)?;
            Ok(pure(&v))
        }
        FockKind::Thermal { n_bar } => {
            finite("n_bar", n_bar)?;
            if n_bar < 0.0 {
                return domain(format!("n_bar must be >= 0, got {n_bar}"));
            }
            let ratio = n_bar / (n_bar + 1.0);
            let pops: Vec<f64> = (0..cutoff).map(|n| ratio.powi(n as i32) / (n_bar + 1.0)).collect();
            guard(pops.iter().sum(), cutoff)?;
            Ok(CMat::from_diagonal(&DVector::from_iterator(cutoff, pops.into_iter().map(c))))
        }
        FockKind::Epr { r } => {
            finite("r", r)?;
            let lam = r.tanh();
            let mut v = DVector::from_element(cutoff * cutoff, c(0.0));
            let mut amp = (1.0 - lam * lam).sqrt();
            for n in 0..cutoff {
                v[n * cutoff + n] = c(amp);
                amp *= lam;
            }
            guard(v.norm_squared(), cutoff)?;
            Ok(pure(&v))
        }
        FockKind::SqueezedThermal2 { r, n_a, n_b } => squeezed_thermal2(r, n_a, n_b, cutoff),
    }
}

/// Extra levels per mode used while exponentiating the generator.
const PAD: usize = 12;

fn squeezed_thermal2(r: f64, n_a: f64, n_b: f64, cutoff: usize) -> Result<CMat> {
    finite("r", r)?;
    let k = cutoff + PAD;
    let pa = |n_bar: f64| -> Result<Vec<f64>> {
        finite("n_bar", n_bar)?;
        if n_bar < 0.0 {
            return domain(format!("n_bar must be >= 0, got {n_bar}"));
        }
        let ratio = n_bar / (n_bar + 1.0);
        Ok((0..k).map(|n| ratio.powi(n as i32) / (n_bar + 1.0)).collect())
    };
    let (pa_, pb_) = (pa(n_a)?, pa(n_b)?);
    // The generator conserves n_a − n_b, so exponentiate sector by sector.
    let mut full = CMat::zeros(k * k, k * k);
    for delta in -(k as i64 - 1)..(k as i64) {
        let states: Vec<(usize, usize)> = (0..k)
            .filter_map(|nb| {
                let na = nb as i64 + delta;
                (na >= 0 && (na as usize) < k).then_some((na as usize, nb))
            })
            .collect();
        let m = states.len();
        // H = i r (a†b† − ab) restricted to the sector
        let mut h = CMat::zeros(m, m);
        for j in 0..m.saturating_sub(1) {
            let (na, nb) = states[j];
            let amp = (((na + 1) * (nb + 1)) as f64).sqrt() * r;
            h[(j + 1, j)] = Complex64::new(0.0, amp);
            h[(j, j + 1)] = Complex64::new(0.0, -amp);
        }
        let e = eig(&h);
        let phase = e.eigenvalues.map(|x| Complex64::new(0.0, -x).exp());
        let u = &e.eigenvectors * CMat::from_diagonal(&phase) * e.eigenvectors.adjoint();
        let d = DVector::from_iterator(m, states.iter().map(|&(na, nb)| c(pa_[na] * pb_[nb])));
        let block = &u * CMat::from_diagonal(&d) * u.adjoint();
        for (i, &(ia, ib)) in states.iter().enumerate() {
            for (j, &(ja, jb)) in states.iter().enumerate() {
                full[(ia * k + ib, ja * k + jb)] = block[(i, j)];
            }
        }
    }
    let keep: Vec<usize> = (0..k * k).filter(|&i| i / k < cutoff && i % k < cutoff).collect();
    let rho = CMat::from_fn(keep.len(), keep.len(), |i, j| full[(keep[i], keep[j])]);
    guard(rho.trace().re, cutoff)?;
    Ok(rho)
}

pub fn annihilation(cutoff: usize) -> CMat {
    let mut a = CMat::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    a
}

/// (q, p) = (a + a†, −i(a − a†)) on `mode` of an `n_modes` system.
fn quadratures(cutoff: usize, mode: usize, n_modes: usize) -> (CMat, CMat) {
    let a = annihilation(cutoff);
    let q = &a + a.adjoint();
    let p = (&a - a.adjoint()) * Complex64::new(0.0, -1.0);
    let id = CMat::identity(cutoff, cutoff);
    let lift = |op: &CMat| {
        let mut out = CMat::identity(1, 1);
        for k in 0..n_modes {
            out = out.kronecker(if k == mode { op } else { &id });
        }
        out
    };
    (lift(&q), lift(&p))
}

fn expect(rho: &CMat, op: &CMat) -> f64 {
    (rho * op).trace().re
}

/// Mean and covariance of a truncated density matrix.
pub fn moments(rho: &CMat, cutoff: usize, n_modes: usize) -> Result<(Vector, Mat)> {
    if rho.nrows() != cutoff.pow(n_modes as u32) {
        return Err(Error::Shape(format!("density matrix dimension {} != cutoff^modes", rho.nrows())));
    }
    let ops: Vec<CMat> = (0..n_modes)
        .flat_map(|m| {
            let (q, p) = quadratures(cutoff, m, n_modes);
            [q, p]
        })
        .collect();
    let dim = 2 * n_modes;
    let mean = Vector::from_iterator(dim, ops.iter().map(|o| expect(rho, o)));
    let rho_ops: Vec<CMat> = ops.iter().map(|o| rho * o).collect();
    // ½⟨{A,B}⟩ = Re Tr(ρAB) for Hermitian ρ, A, B
    let tr_prod = |x: &CMat, y: &CMat| x.iter().zip(y.transpose().iter()).map(|(a, b)| a * b).sum::<Complex64>().re;
    let mut cov = Mat::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = tr_prod(&rho_ops[i], &ops[j]) - mean[i] * mean[j];
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok((mean, cov))
}

fn herm(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

struct Eigen {
    eigenvalues: DVector<f64>,
    eigenvectors: CMat,
}

/// Hermitian eigendecomposition on the support of `m`. Identically zero
/// rows/columns are split off as exact zero eigenpairs first: the dense
/// solver fails to converge on large rank-one matrices with sparse support,
/// such as two-mode pure states.
fn eig(m: &CMat) -> Eigen {
    let h = herm(m);
    let n = h.nrows();
    let support: Vec<usize> = (0..n).filter(|&i| h.row(i).iter().any(|z| *z != c(0.0))).collect();
    let k = support.len();
    let mut eigenvalues = DVector::zeros(n);
    let mut eigenvectors = CMat::zeros(n, n);
    let sub = CMat::from_fn(k, k, |i, j| h[(support[i], support[j])]);
    let e = if k > 0 { Some(SymmetricEigen::new(sub)) } else { None };
    for j in 0..k {
        let e = e.as_ref().expect("non-empty support");
        eigenvalues[j] = e.eigenvalues[j];
        for (i, &row) in support.iter().enumerate() {
            eigenvectors[(row, j)] = e.eigenvectors[(i, j)];
        }
    }
    for (j, row) in (0..n).filter(|i| !support.contains(i)).enumerate() {
        eigenvectors[(row, k + j)] = c(1.0);
    }
    Eigen { eigenvalues, eigenvectors }
}

/// ρ^s with negative truncation noise clipped to zero.
/// Eigenvalues below this are round-off of the decomposition and are dropped
/// before taking fractional powers, where they would otherwise be amplified.
pub const EIG_FLOOR: f64 = 1e-14;

fn frac_pow(x: f64, s: f64) -> Complex64 {
    if x > EIG_FLOOR {
        c(x.powf(s))
    } else {
        c(0.0)
    }
}

pub fn power(rho: &CMat, s: f64) -> CMat {
    let e = eig(rho);
    let d = e.eigenvalues.map(|x| frac_pow(x, s));
    &e.eigenvectors * CMat::from_diagonal(&d) * e.eigenvectors.adjoint()
}

pub fn trace_distance(rho0: &CMat, rho1: &CMat) -> f64 {
    0.5 * eig(&(rho0 - rho1)).eigenvalues.iter().map(|x| x.abs()).sum::<f64>()
}

/// F = (Tr √(√ρ0 ρ1 √ρ0))².
pub fn fidelity(rho0: &CMat, rho1: &CMat) -> f64 {
    let s0 = power(rho0, 0.5);
    let m = &s0 * rho1 * &s0;
    let t: f64 = eig(&m).eigenvalues.iter().map(|&x| x.max(0.0).sqrt()).sum();
    t * t
}

/// Tr(ρ0^s ρ1^{1−s}).
pub fn chernoff_cs(rho0: &CMat, rho1: &CMat, s: f64) -> f64 {
    (power(rho0, s) * power(rho1, 1.0 - s)).trace().re
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleMetrics {
    pub trace_distance: f64,
    pub helstrom: f64,
    pub fidelity: f64,
    pub cs: Vec<(f64, f64)>,
}

pub fn oracle_metrics(rho0: &CMat, rho1: &CMat, s_values: &[f64]) -> Result<OracleMetrics> {
    if rho0.shape() != rho1.shape() {
        return Err(Error::Shape(format!("dimension mismatch {:?} vs {:?}", rho0.shape(), rho1.shape())));
    }
    let d = trace_distance(rho0, rho1);
    let e0 = eig(rho0);
    let e1 = eig(rho1);
    let pow = |e: &Eigen, s: f64| {
        let d = e.eigenvalues.map(|x| frac_pow(x, s));
        &e.eigenvectors * CMat::from_diagonal(&d) * e.eigenvectors.adjoint()
    };
    let cs = s_values
        .iter()
        .map(|&s| (s, (pow(&e0, s) * pow(&e1, 1.0 - s)).trace().re))
        .collect();
    Ok(OracleMetrics { trace_distance: d, helstrom: 0.5 * (1.0 - d), fidelity: fidelity(rho0, rho1), cs })
}

/// The phase-space state with the same expansion parameters.
pub fn gaussian_twin(kind: FockKind) -> Result<GaussianState> {
    match kind {
        FockKind::Coherent { alpha } => make_state(&StateKind::Coherent { alpha: vec![alpha] }, 1),
        FockKind::SqueezedVacuum { r } => make_state(&StateKind::SqueezedVacuum { r, theta: 0.0 }, 1),
        FockKind::Thermal { n_bar } => make_state(&StateKind::Thermal { n_bar }, 1),
        FockKind::Epr { r } => make_state(&StateKind::Epr { r }, 2),
        FockKind::SqueezedThermal2 { r, n_a, n_b } => {
            let th = Mat::from_diagonal(&Vector::from_vec(vec![
                2.0 * n_a + 1.0,
                2.0 * n_a + 1.0,
                2.0 * n_b + 1.0,
                2.0 * n_b + 1.0,
            ]));
            let s = crate::unitaries::squeeze2(r)?.s;
            GaussianState::new(Vector::zeros(4), &s * th * s.transpose())
        }
    }
}

/// Partial trace over the second mode of a two-mode matrix.
pub fn trace_out_second(rho: &CMat, cutoff: usize) -> CMat {
    CMat::from_fn(cutoff, cutoff, |i, j| (0..cutoff).map(|k| rho[(i * cutoff + k, j * cutoff + k)]).sum())
}
